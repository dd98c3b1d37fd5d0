//! Search, exact correction and rigorous certification of admissible fan
//! subsolutions for the two-dimensional isentropic Euler Riemann problem, and
//! construction of a convex internal energy realizing the pressure law.

pub mod certify;
pub mod convexify;
pub mod correction;
pub mod document;
pub mod exactnum;
pub mod fan_model;
pub mod solver;
pub mod system;
pub mod witness;
