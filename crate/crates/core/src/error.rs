use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion norm is below the zero threshold")]
    ZeroQuaternion,

    #[error("point is not on S³×S³: |p|−1 = {p_err:e}, |q|−1 = {q_err:e}")]
    NotOnManifold { p_err: f64, q_err: f64 },

    #[error("vector is not tangent: Re(p̄U) = {u_err:e}, Re(q̄V) = {v_err:e}")]
    NotTangent { u_err: f64, v_err: f64 },

    #[error("quaternion is not unit: |q|−1 = {0:e}")]
    NotUnit(f64),

    #[error("tangent vectors live at different base points (distance {0:e})")]
    BaseMismatch(f64),

    #[error("plane is degenerate: Gram determinant {0:e}")]
    DegeneratePlane(f64),

    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    StepOutOfRange(f64),

    #[error("point ({u}, {v}) is closer than two steps to the domain boundary")]
    BoundaryTooClose { u: f64, v: f64 },

    #[error("point ({u}, {v}) is not a node of the sampled grid")]
    OffGrid { u: f64, v: f64 },

    #[error("chart coordinates leave the validity ball (norm {0})")]
    OutsideChart(f64),

    #[error(
        "parametrization is not almost complex with Jφ_u = φ_v: residual {residual:e} > {tolerance:e}{}",
        if *.opposite { " (orientation reversed: swap u and v)" } else { "" }
    )]
    NotAlmostComplex { residual: f64, tolerance: f64, opposite: bool },

    #[error("induced metric degenerates: λ = {0:e}")]
    DegenerateMetric(f64),

    #[error("domain is periodic along {0}; pass the periodic flag to integrate on the universal cover")]
    PeriodicWithoutFlag(&'static str),

    #[error("parametrization is not isothermal: defect {0:e}")]
    NotIsothermal(f64),

    #[error("immersion degenerates: |ε_u×ε_v| = {0:e}")]
    DegenerateImmersion(f64),

    #[error("H-surface residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error(
        "input solves the H-surface equation with the opposite sign \
         (residual {flipped:e} vs {direct:e}); swap u and v"
    )]
    OrientationMismatch { direct: f64, flipped: f64 },

    #[error("frame integration diverged: path consistency {residual:e} > {tolerance:e}")]
    IntegrationDiverged { residual: f64, tolerance: f64 },

    #[error("bad input: {0}")]
    BadInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
