pub mod check;
pub mod counterex3d;
pub mod dyadic_grid;
pub mod energy;
pub mod geom;
pub mod quad;
pub mod retract;
pub mod sbv2d;
pub mod scenario;
pub mod sobolev_approx;
pub mod svg;
pub mod vexp;
