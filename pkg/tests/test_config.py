import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perihom.conductivity import ConductivityProfile
from perihom.config import ConfigError, ProfileSpec, RunConfig, bundled_path, load_config, parse_config
from perihom.geometry import reference_geometry, volume_fraction

MINIMAL = """
[geometry]
centers = 0.1+0.1j
radii = 0.2

[matrix]
values = 2

[inclusion]
values = 6
"""


@pytest.mark.parametrize("name", ["reference", "empty", "constant", "reference.cfg"])
def test_bundled_configs_load(name):
    cfg = load_config(name)
    cfg.geometry()
    cfg.family().require_proportional()


def test_reference_config_matches_reference_setup():
    cfg = load_config("reference")
    assert volume_fraction(cfg.geometry()) == volume_fraction(reference_geometry())
    fam = cfg.family()
    assert fam.constants[0] == pytest.approx(0.09, abs=1e-14)
    assert fam.matrix_profile(0.0) == 13.5
    assert cfg.samples == 81 and cfg.flux_intensity == -1.0 and cfg.flux_angle == 0.0


def test_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.order == 6 and cfg.tol == 1e-6 and cfg.adaptive
    assert cfg.shift_range is None and cfg.cells is None
    assert cfg.residual_grids == (128, 256)
    assert cfg.solver_options() == {"truncation_order": 6, "tol": 1e-6, "max_order": 64}


def test_fixed_order_options():
    cfg = parse_config(MINIMAL + "\n[solver]\norder = 8\nadaptive = no\n")
    assert cfg.solver_options()["max_order"] == 8


def test_explicit_sweep():
    cfg = parse_config(MINIMAL + "\n[sweep]\nshifts = -5, 5\ncells = -2:2, 0:1\n")
    assert cfg.shift_range == (-5.0, 5.0)
    assert cfg.cells == ((-2, 2), (0, 1))


@pytest.mark.parametrize(
    "extra, fragment",
    [
        ("\n[solver]\norder = x\n", "line 13: [solver] order"),
        ("\n[sweep]\nsamples = 1\n", "[sweep] samples"),
        ("\n[sweep]\ninterpolation = cubic\n", "[sweep] interpolation"),
        ("\n[sweep]\nshifts = 3, 1\n", "[sweep] shifts"),
        ("\n[sweep]\ncells = 1:0, 0:1\n", "[sweep] cells"),
        ("\n[bogus]\nx = 1\n", "unknown section [bogus]"),
    ],
)
def test_errors_name_the_field(extra, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL + extra, "test.cfg")
    assert fragment in str(exc.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[geometry]\ncenters = 0, 0.1\nradii = 0.145\n[matrix]\nvalues = 1\n[inclusion]\nvalues = 2\n", "overlap"),
        ("[geometry]\ncenters = 0\nradii = 0.6\n[matrix]\nvalues = 1\n[inclusion]\nvalues = 2\n", "radii"),
        ("[geometry]\ncenters = 0\nradii = 0.1\n[matrix]\nvalues = 1\n", "[inclusion] is missing"),
        ("[geometry]\ncenters = 0\nradii = 0.1, 0.2\n[matrix]\nvalues = 1\n[inclusion]\nvalues = 2\n", "radii"),
        ("[geometry]\ncenters = 0\nradii = 0.1\n[matrix]\ntrapezoid = 1, 2\n[inclusion]\nvalues = 2\n", "trapezoid"),
        ("[matrix]\nvalues = -1\n", "values"),
        ("[geometry]\ncenters =\n", "missing section [matrix]"),
        ("[geometry\n", "test.cfg"),
    ],
)
def test_invalid_inputs(text, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "test.cfg")
    assert fragment in str(exc.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


def test_bundled_path_exists():
    assert bundled_path("reference").is_file()


def test_roundtrip_bundled():
    for name in ("reference", "empty", "constant"):
        cfg = load_config(name)
        assert parse_config(cfg.to_text()) == cfg


profile = st.one_of(
    st.tuples(st.floats(-5, -0.1), st.floats(0.1, 5), st.floats(0.5, 20), st.floats(0.5, 20)).map(
        lambda t: ("trap", t)
    ),
    st.floats(0.1, 100).map(lambda v: ("const", v)),
)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-0.25, 0.25), st.floats(-0.25, 0.25), st.floats(0.01, 0.2), profile, st.floats(0.1, 10),
    st.floats(-3, 3), st.floats(0, 6.28), st.integers(0, 20), st.sampled_from(["pchip", "linear"]),
    st.booleans(), st.integers(2, 300),
)
def test_roundtrip_random(x, y, r, prof, scale, A, theta, order, interp, adaptive, samples):
    kind, p = prof
    if kind == "trap":
        built = ConductivityProfile.trapezoid(*p)
        matrix = ProfileSpec(built.breakpoints, built.values, p)
        incl = ProfileSpec(built.breakpoints, tuple(v * scale for v in built.values))
    else:
        matrix = ProfileSpec((0.0,), (p,))
        incl = ProfileSpec((0.0,), (p * scale,))
    cfg = RunConfig(
        centers=(complex(x, y),), radii=(r,), contrast_ids=(0,), matrix=matrix, inclusions=(incl,),
        flux_intensity=A, flux_angle=theta, order=order, interpolation=interp, adaptive=adaptive,
        samples=samples, shift_range=(-1.5, 2.25), cells=((-3, 3), (0, 2)),
    )
    back = parse_config(cfg.to_text())
    assert back == cfg
    assert back.geometry() == cfg.geometry()
    assert np.allclose(back.family().matrix_profile(np.linspace(-6, 6, 13)),
                       cfg.family().matrix_profile(np.linspace(-6, 6, 13)), rtol=0, atol=0)
