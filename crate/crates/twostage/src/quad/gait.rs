//! Footfall schedules: which feet should be on the ground at a given phase.
//!
//! Legs are indexed front-left, front-right, hind-left, hind-right. A leg is
//! in contact while the wrapped phase relative to its offset is inside the
//! duty window; otherwise it swings at a fixed clearance height.

/// Swing-foot clearance height, m.
pub const SWING_FOOT_HEIGHT: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gait {
    Walk,
    Trot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootfallPattern {
    pub gait: Gait,
    /// Gait cycle period, s.
    pub period: f64,
    /// Per-leg phase offsets in [0,1), order FL, FR, HL, HR.
    pub offsets: [f64; 4],
    /// Fraction of the cycle each foot spends on the ground.
    pub duty_cycle: f64,
}

impl FootfallPattern {
    /// Lateral-sequence walk: one foot swings at a time, three always planted.
    pub fn walk() -> Self {
        FootfallPattern {
            gait: Gait::Walk,
            period: 1.0,
            offsets: [0.0, 0.5, 0.75, 0.25],
            duty_cycle: 0.75,
        }
    }

    /// Two-beat trot: diagonal pairs (FL,HR) and (FR,HL) alternate.
    pub fn trot() -> Self {
        FootfallPattern {
            gait: Gait::Trot,
            period: 0.6,
            offsets: [0.0, 0.5, 0.5, 0.0],
            duty_cycle: 0.5,
        }
    }

    /// Whether `leg` should be in contact at `phase` ∈ [0,1).
    pub fn contact_flag(&self, leg: usize, phase: f64) -> bool {
        let local = (phase - self.offsets[leg]).rem_euclid(1.0);
        local < self.duty_cycle
    }

    /// All four contact flags at `phase`.
    pub fn contacts(&self, phase: f64) -> [bool; 4] {
        [
            self.contact_flag(0, phase),
            self.contact_flag(1, phase),
            self.contact_flag(2, phase),
            self.contact_flag(3, phase),
        ]
    }
}

/// Scheduled foot height: on the ground in contact, fixed clearance in swing.
pub fn desired_foot_z(in_contact: bool) -> f64 {
    if in_contact {
        0.0
    } else {
        SWING_FOOT_HEIGHT
    }
}
