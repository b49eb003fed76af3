pub mod divisor;
pub mod function_spaces;
pub mod linalg;
pub mod operators;
pub mod rational;
pub mod scenario;
pub mod symbol;
pub mod tdz;
