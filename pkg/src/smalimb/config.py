"""Default synthetic limb and toolkit-wide defaults.

The synthetic limb is a 10 cm, five-link chain whose first bending mode sits
near 1.7 Hz (10.7 rad/s) with 8% damping. That stiffness sags the horizontal
cantilever by about 12° under gravity. ``link_inertia`` is a lumped effective
value, far above a slender silicone segment's. It keeps the chain's highest
mode (about 80 rad/s) inside what fixed-step RK4 at 100 Hz resolves. The
thermal constants give a 20 s convective time constant, a 2 s thermocouple
lag and a 145 °C full-duty steady state; each force gain puts a 30° bend at
about 40 °C above ambient.
"""

from .manipulator import ManipulatorParams
from .simcore import LimbParams, PIGains, SimConfig
from .thermal import ThermalParams

T_AMBIENT = 25.0


def default_manipulator(**overrides):
    base = dict(n=5, link_length=0.02, link_mass=0.005, link_com_offset=0.01,
                link_inertia=6.0e-5, k=0.1, sigma=0.0015)
    base.update(overrides)
    return ManipulatorParams(**base)


def default_limb(**manip_overrides):
    return LimbParams(
        manip=default_manipulator(**manip_overrides),
        left=ThermalParams(a1=-0.045, a2=5.5, a3=0.45, beta=4.2e-4, T0=T_AMBIENT),
        right=ThermalParams(a1=-0.05, a2=6.0, a3=0.5, beta=4.4e-4, T0=T_AMBIENT),
    )


DEFAULT_SIM = SimConfig(dt_integration=0.01, dt_sample=0.1)
DEFAULT_GAINS = PIGains()
