"""Back-reaction of an accelerated extended detector on a massless scalar field."""

from .core import (
    Constants,
    DetectorState,
    DomainError,
    ForceLaw,
    TransitionSpec,
    consistent_dm,
    force_law,
)
from .evaporation import (
    EvaporationParams,
    cascade_probability,
    discretize,
    ir_integral,
    mass_loss_rate,
    sample_planck_frequency,
    trajectory,
    validity_check,
)
from .oracle import QuadratureConfig, integral_p21, pole_sum_p21, transient_bound
from .transition import (
    detailed_balance_ratio,
    hawking_temperature,
    p21_closed_form,
    unruh_temperature,
)
from .wavepacket import (
    PacketParams,
    energy_expectation,
    eval_exact,
    eval_semiclassical,
    overlap_exponent,
    overlap_peak,
    transition_phase,
)

__version__ = "0.1.0"
