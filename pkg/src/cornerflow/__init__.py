"""Euler flow in the rotated unit square with odd symmetry about the vertical axis.

The square has a corner at the origin and edges along ``x2 = x1`` and
``x2 = -x1``.  The package evaluates the Dirichlet Green function by an image
lattice sum, the symmetry-reduced Biot-Savart kernel built from it, a vortex
particle discretisation of the flow, and the experiments that measure the
velocity-ratio bound near the corner and the growth of boundary vorticity.
"""

from cornerflow.errors import (
    CornerflowError,
    DomainError,
    NonConvergenceError,
    QuadratureError,
    SeparationError,
    SingularConfigurationError,
    TransportError,
)
from cornerflow.geometry import (
    SQRT2,
    BoundaryMarker,
    Edge,
    LatticeIndex,
    Point,
    Region,
    RegionSpec,
    contains,
    lattice_shift,
    marker_position,
    odd_representative,
    reflect,
    to_unit_square,
)
from cornerflow.greens import (
    OracleConfig,
    ShellPolicy,
    green_image,
    green_oracle,
    green_term,
)
from cornerflow.kernel import (
    KernelConfig,
    RatioReport,
    VelocitySample,
    combined_kernel,
    kernel_term,
    ratio_sweep,
    stream_function,
    velocity_dense,
    velocity_particles,
)
from cornerflow.experiments import GrowthReport, fit_exponential
from cornerflow.presets import Preset, preset_omega0
from cornerflow.transport import (
    FlowHistory,
    ParticleSet,
    TrajectoryRecord,
    VorticityParticle,
    backward_trajectory,
    gronwall_check,
    init_particles,
    simulate,
    step,
    vorticity_at,
)

__version__ = "0.1.0"
