pub mod angular;
pub mod bessel;
pub mod channel;
pub mod experiment;
pub mod geometry;
pub mod nmi;
pub mod quadrature;
