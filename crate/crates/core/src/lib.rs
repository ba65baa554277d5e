//! Cavity QED of single multilevel atoms coupled to the two counter-propagating
//! modes of a whispering-gallery-mode resonator, including the longitudinal
//! polarization of the evanescent field.

pub mod atom;
pub mod fields;
pub mod quantum;
pub mod spectra;
pub mod transit;
