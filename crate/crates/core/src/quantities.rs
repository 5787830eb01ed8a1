//! The eleven information functionals that drive regime selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::prob::{EntropyCache, JointDistribution, Var, VarSet};

/// Slack used when checking the chain-rule consistency of a record.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Mutual-information functionals in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InfoQuantities {
    /// `I(X2; Y3)`
    #[serde(rename = "iX2Y3")]
    pub i_x2_y3: f64,
    /// `I(X2; Z)`
    #[serde(rename = "iX2Z")]
    pub i_x2_z: f64,
    /// `I(X2; Z | X1)`
    #[serde(rename = "iX2Z_X1")]
    pub i_x2_z_x1: f64,
    /// `I(Ŷ2; Y3 | X2)`
    #[serde(rename = "iY2hY3_X2")]
    pub i_yhat_y3_x2: f64,
    /// `I(Ŷ2; X1, Y3 | X2)`, Bob's Wyner-Ziv rate.
    #[serde(rename = "wzBob")]
    pub wz_bob: f64,
    /// `I(Ŷ2; X1, Z | X2)`, Eve's Wyner-Ziv rate.
    #[serde(rename = "wzEve")]
    pub wz_eve: f64,
    /// `I(X1; Ŷ2, Y3 | X2)`
    #[serde(rename = "iX1_Y2hY3_X2")]
    pub i_x1_yhat_y3_x2: f64,
    /// `I(X1; Y3 | X2)`
    #[serde(rename = "iX1Y3_X2")]
    pub i_x1_y3_x2: f64,
    /// `I(X1; Z)`
    #[serde(rename = "iX1Z")]
    pub i_x1_z: f64,
    /// `I(X1; Z | X2)`
    #[serde(rename = "iX1Z_X2")]
    pub i_x1_z_x2: f64,
    /// `I(X1, X2; Z)`
    #[serde(rename = "iX1X2Z")]
    pub i_x1x2_z: f64,
}

impl InfoQuantities {
    /// Field names and values in a fixed order (serialization names).
    pub fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("iX2Y3", self.i_x2_y3),
            ("iX2Z", self.i_x2_z),
            ("iX2Z_X1", self.i_x2_z_x1),
            ("iY2hY3_X2", self.i_yhat_y3_x2),
            ("wzBob", self.wz_bob),
            ("wzEve", self.wz_eve),
            ("iX1_Y2hY3_X2", self.i_x1_yhat_y3_x2),
            ("iX1Y3_X2", self.i_x1_y3_x2),
            ("iX1Z", self.i_x1_z),
            ("iX1Z_X2", self.i_x1_z_x2),
            ("iX1X2Z", self.i_x1x2_z),
        ]
    }

    /// Checks nonnegativity and the chain-rule relations any realizable
    /// record must satisfy.
    pub fn violations(&self) -> Vec<Violation> {
        let tol = CONSISTENCY_TOL;
        let mut v = Vec::new();
        for (name, x) in self.fields() {
            if !x.is_finite() {
                v.push(Violation::new(format!("/{name}"), "not a finite number"));
            } else if x < -tol {
                v.push(Violation::new(format!("/{name}"), "negative").with_magnitude(x));
            }
        }
        let mut rel = |ok: bool, what: &str, gap: f64| {
            if !ok {
                v.push(Violation::new("/", what.to_string()).with_magnitude(gap));
            }
        };
        let d1 = self.i_x1x2_z - (self.i_x2_z + self.i_x1_z_x2);
        rel(d1.abs() <= tol, "iX1X2Z != iX2Z + iX1Z_X2", d1);
        let d2 = self.i_x1x2_z - (self.i_x1_z + self.i_x2_z_x1);
        rel(d2.abs() <= tol, "iX1X2Z != iX1Z + iX2Z_X1", d2);
        rel(self.i_x2_z_x1 >= self.i_x2_z - tol, "iX2Z_X1 < iX2Z", self.i_x2_z_x1 - self.i_x2_z);
        rel(self.i_x1_z_x2 >= self.i_x1_z - tol, "iX1Z_X2 < iX1Z", self.i_x1_z_x2 - self.i_x1_z);
        rel(self.wz_bob >= self.i_yhat_y3_x2 - tol, "wzBob < iY2hY3_X2", self.wz_bob - self.i_yhat_y3_x2);
        rel(
            self.i_x1_yhat_y3_x2 >= self.i_x1_y3_x2 - tol,
            "iX1_Y2hY3_X2 < iX1Y3_X2",
            self.i_x1_yhat_y3_x2 - self.i_x1_y3_x2,
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Every relay-dependent functional is zero: no compression, no relay input.
    pub fn degenerate_relay(i_x1_y3: f64, i_x1_z: f64) -> Self {
        InfoQuantities {
            i_x1_yhat_y3_x2: i_x1_y3,
            i_x1_y3_x2: i_x1_y3,
            i_x1_z,
            i_x1_z_x2: i_x1_z,
            i_x1x2_z: i_x1_z,
            ..Default::default()
        }
    }

    /// Draws a record satisfying every consistency relation (including
    /// `I(X1;Ŷ2,Y3|X2) + I(Ŷ2;Y3|X2) - WZ^Bob = I(X1;Y3|X2)`), with each
    /// functional of order one bit. Not necessarily realizable by a channel.
    pub fn sample_consistent<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let i_x2_z = rng.gen::<f64>();
        let i_x1_z = rng.gen::<f64>();
        let interaction = rng.gen::<f64>();
        let i_x2_y3 = 1.5 * rng.gen::<f64>();
        let i_yhat_y3_x2 = rng.gen::<f64>();
        let extra = rng.gen::<f64>();
        let i_x1_y3_x2 = 1.5 * rng.gen::<f64>();
        let wz_eve = 2.0 * rng.gen::<f64>();
        InfoQuantities {
            i_x2_y3,
            i_x2_z,
            i_x2_z_x1: i_x2_z + interaction,
            i_yhat_y3_x2,
            wz_bob: i_yhat_y3_x2 + extra,
            wz_eve,
            i_x1_yhat_y3_x2: i_x1_y3_x2 + extra,
            i_x1_y3_x2,
            i_x1_z,
            i_x1_z_x2: i_x1_z + interaction,
            i_x1x2_z: i_x2_z + i_x1_z + interaction,
        }
    }
}

/// Evaluates all eleven functionals on one joint, sharing marginal entropies.
pub fn compute_info_quantities(joint: &JointDistribution) -> InfoQuantities {
    use Var::*;
    let mut c = EntropyCache::new(joint);
    let s = VarSet::from;
    let none = VarSet::EMPTY;
    InfoQuantities {
        i_x2_y3: c.mutual_information(s(X2), s(Y3), none),
        i_x2_z: c.mutual_information(s(X2), s(Z), none),
        i_x2_z_x1: c.mutual_information(s(X2), s(Z), s(X1)),
        i_yhat_y3_x2: c.mutual_information(s(Y2Hat), s(Y3), s(X2)),
        wz_bob: c.mutual_information(s(Y2Hat), X1 | Y3, s(X2)),
        wz_eve: c.mutual_information(s(Y2Hat), X1 | Z, s(X2)),
        i_x1_yhat_y3_x2: c.mutual_information(s(X1), Y2Hat | Y3, s(X2)),
        i_x1_y3_x2: c.mutual_information(s(X1), s(Y3), s(X2)),
        i_x1_z: c.mutual_information(s(X1), s(Z), none),
        i_x1_z_x2: c.mutual_information(s(X1), s(Z), s(X2)),
        i_x1x2_z: c.mutual_information(X1 | X2, s(Z), none),
    }
}
