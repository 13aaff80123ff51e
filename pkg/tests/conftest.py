import math

import pytest

from calr import (
    Layer,
    LayeredMedium,
    build_cloak,
    constant_profile,
    geometric_spectrum,
    profile_from_expr,
    unit_profile,
)


@pytest.fixture(scope="session")
def mn_cloak():
    """Constant-coefficient cloak: a=1 on (1,4), omega radius 8, d=2."""
    return build_cloak(constant_profile(1.0, 1.0, 4.0), 1.0, 4.0, 8.0, dim=2)


@pytest.fixture(scope="session")
def mn_shell():
    """Plain core/shell/matrix medium (no core ring): unit everywhere,
    plasmonic on (0.25, 1), domain radius 8, d=2."""
    return LayeredMedium(2, 8.0, (
        Layer(0.0, 0.25, unit_profile(0.0, 0.25)),
        Layer(0.25, 1.0, unit_profile(0.25, 1.0), plasmonic=True),
        Layer(1.0, 8.0, unit_profile(1.0, 8.0)),
    ))


@pytest.fixture(scope="session")
def mn_cloak_3d():
    return build_cloak(constant_profile(1.0, 1.0, 4.0), 1.0, 4.0, 8.0, dim=3)


@pytest.fixture(scope="session")
def wavy_cloak():
    """Variable-coefficient cloak on the same radii."""
    return build_cloak(profile_from_expr("2 + sin(r)", 1.0, 4.0), 1.0, 4.0, 8.0, dim=2)


@pytest.fixture(scope="session")
def geometric_source():
    def make(t, r0, max_mode=48, dim=2):
        return geometric_spectrum(t, max_mode, r0, dim=dim)
    return make


def assert_close(a, b, tol, label=""):
    scale = max(abs(a), abs(b), 1e-300)
    assert abs(a - b) <= tol * scale, f"{label}: {a} vs {b} (rel {abs(a-b)/scale:.3e})"


@pytest.fixture(scope="session")
def const2_cloak():
    """Same radii with a doubled annulus coefficient."""
    return build_cloak(constant_profile(2.0, 1.0, 4.0), 1.0, 4.0, 8.0, dim=2)
