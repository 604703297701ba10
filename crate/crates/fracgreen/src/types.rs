use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Order of the Caputo-Dzhrbashyan derivative, restricted to the strictly
/// fractional range 0 < alpha < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(FractionalOrder(alpha))
        } else {
            Err(Error::Config(format!(
                "fractional order must lie in (0,1), got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        FractionalOrder::new(v)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(a: FractionalOrder) -> f64 {
        a.0
    }
}
