use thiserror::Error;

/// Errors raised by tower construction, schedule derivation, exact
/// computation and report handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tower masses sum to {sum}, expected 1 within 1e-9")]
    MassSum { sum: f64 },

    #[error("tower heights have gcd {gcd} > 1 but an aperiodic system was required")]
    Periodicity { gcd: u64 },

    #[error("invalid tower specification: {0}")]
    InvalidSpec(String),

    #[error("invalid state (tower {tower}, level {level})")]
    InvalidState { tower: usize, level: u64 },

    #[error("window n = {n} needs ~{ops:.3e} elementary operations, budget is {budget:.3e}")]
    WindowTooLarge { n: u64, ops: f64, budget: f64 },

    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),

    #[error("bad constants: {0}")]
    BadConstants(String),

    #[error("variant mismatch: {0}")]
    VariantMismatch(String),

    #[error("degenerate model: mu(A) = {mass_a} is not in (0, 1)")]
    DegenerateModel { mass_a: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("probe index {k} is even; the density ratio bound is only established for odd k")]
    EvenIndex { k: usize },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("invalid rate sequence: {0}")]
    InvalidRate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("bound mismatch in probe `{probe}`: recorded {recorded}, recomputed {recomputed}")]
    BoundMismatch {
        probe: String,
        recorded: f64,
        recomputed: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
