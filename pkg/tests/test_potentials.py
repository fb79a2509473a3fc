import json
from importlib import resources

import jsonschema
import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latcurrent import (GOLDEN_ALPHA, PotentialSpec, PotentialValues, ValidationError,
                        derived_seed, realization, sample_potential)


def fib_oracle(N, lam=1.0, omega=0.0):
    mpmath.mp.dps = 50
    alpha = (mpmath.sqrt(5) - 1) / 2
    out = []
    for n in range(1, N + 1):
        x = mpmath.frac(omega + n * alpha)
        out.append(-lam if x >= 1 - alpha else 0.0)
    return np.array(out)


def test_zero_potential():
    assert sample_potential(PotentialSpec.zero(), 5).values.tolist() == [0.0] * 5


def test_fibonacci_first_values():
    v = sample_potential(PotentialSpec.fibonacci(1.0, 0.0), 5).values
    assert v.tolist() == [-1.0, 0.0, -1.0, -1.0, 0.0]


def test_fibonacci_matches_high_precision_oracle():
    N = 3000
    v = sample_potential(PotentialSpec.fibonacci(1.5, 0.0), N).values
    np.testing.assert_array_equal(v, fib_oracle(N, 1.5))


def test_almost_mathieu_half_rotation():
    v = sample_potential(PotentialSpec.almost_mathieu(1.0, 0.5, 0.0), 2).values
    np.testing.assert_allclose(v, [2.0, -2.0], atol=1e-14)


def test_almost_mathieu_formula():
    spec = PotentialSpec.almost_mathieu(0.7, 0.3819660112501051, 0.25)
    n = np.arange(1, 51)
    expect = -2 * 0.7 * np.cos(2 * np.pi * (0.25 + n * 0.3819660112501051))
    np.testing.assert_allclose(sample_potential(spec, 50).values, expect, atol=1e-12)


def test_golden_default():
    assert PotentialSpec.fibonacci().alpha is None
    assert GOLDEN_ALPHA == pytest.approx((5 ** 0.5 - 1) / 2)


def test_anderson_reproducible_and_prefix():
    spec = PotentialSpec.anderson([-1.0, 0.0, 2.0], [0.2, 0.5, 0.3], seed=42)
    a = sample_potential(spec, 200).values
    b = sample_potential(spec, 200).values
    c = sample_potential(spec, 50).values
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[:50], c)
    assert set(np.unique(a)) <= {-1.0, 0.0, 2.0}


def test_anderson_frequencies():
    spec = PotentialSpec.anderson([-1.0, 1.0], [0.25, 0.75], seed=3)
    v = sample_potential(spec, 40000).values
    assert np.mean(v == 1.0) == pytest.approx(0.75, abs=0.01)


def test_anderson_zero_weight_value_never_drawn():
    spec = PotentialSpec.anderson([-1.0, 1.0, 9.0], [0.5, 0.5, 0.0], seed=1)
    assert 9.0 not in sample_potential(spec, 5000).values
    assert spec.sup_bound() == 1.0


@pytest.mark.parametrize("kwargs", [
    dict(support=[-1, 1], weights=[0.5, 0.4]),
    dict(support=[1, 1], weights=[0.5, 0.5]),
    dict(support=[-1, 1], weights=[1.5, -0.5]),
    dict(support=[-1, 1], weights=[0.5, 0.5], seed=-1),
])
def test_anderson_validation(kwargs):
    with pytest.raises(ValidationError):
        PotentialSpec.anderson(**kwargs)


@pytest.mark.parametrize("N", [0, -3, 2.5])
def test_bad_length(N):
    with pytest.raises(ValidationError):
        sample_potential(PotentialSpec.zero(), N)


@pytest.mark.parametrize("bad", [
    dict(kind="fibonacci", lam=0.0),
    dict(kind="fibonacci", omega=1.0),
    dict(kind="almost_mathieu", lam=1.0),
    dict(kind="almost_mathieu", lam=1.0, alpha=1.2),
    dict(kind="explicit", values=(1.0, float("nan"))),
    dict(kind="quasi"),
])
def test_spec_validation(bad):
    with pytest.raises(ValidationError):
        PotentialSpec(**bad)


def test_explicit_too_short():
    with pytest.raises(ValidationError):
        sample_potential(PotentialSpec.explicit([1.0, 2.0]), 3)


def test_potential_values_read_only():
    pv = sample_potential(PotentialSpec.explicit([1.0, -3.0, 2.0]), 3)
    assert pv.norm_sup == 3.0
    assert len(pv) == 3
    with pytest.raises(ValueError):
        pv.values[0] = 5.0
    with pytest.raises(ValidationError):
        PotentialValues([1.0, np.inf])


def test_derived_seed_independent_of_order():
    a = [derived_seed(5, k) for k in range(10)]
    b = [derived_seed(5, k) for k in reversed(range(10))][::-1]
    assert a == b
    assert len(set(a)) == 10
    assert derived_seed(5, 0) != derived_seed(6, 0)


def test_realization_semantics():
    and_ = PotentialSpec.bernoulli(1.0, seed=11)
    assert realization(and_, 3).seed == derived_seed(11, 3)
    fib = PotentialSpec.fibonacci(1.0, 0.2)
    assert realization(fib, 0) == fib
    assert realization(fib, 1).omega != 0.2
    z = PotentialSpec.zero()
    assert realization(z, 7) == z


SPECS = [
    PotentialSpec.zero(),
    PotentialSpec.explicit([0.5, -1.0]),
    PotentialSpec.anderson([-1.0, 0.5], [0.3, 0.7], seed=2**63 + 5),
    PotentialSpec.fibonacci(2.0, 0.1),
    PotentialSpec(kind="fibonacci", lam=1.0, alpha=0.4, seed=9),
    PotentialSpec.almost_mathieu(2.0, 0.3, 0.7),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_json_round_trip_and_schema(spec):
    schema = json.loads(resources.files("latcurrent").joinpath(
        "potential_spec.schema.json").read_text())
    obj = json.loads(spec.to_json())
    jsonschema.validate(obj, schema)
    assert PotentialSpec.from_json(spec.to_json()) == spec


def test_schema_rejects_bad_objects():
    schema = json.loads(resources.files("latcurrent").joinpath(
        "potential_spec.schema.json").read_text())
    for bad in ({"kind": "anderson"}, {"kind": "zero", "values": [1]},
                {"kind": "almost_mathieu", "lambda": 1}, {"lambda": 1}):
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(bad, schema)
        with pytest.raises(ValidationError):
            PotentialSpec.from_dict(bad)


def test_from_dict_default_weights():
    spec = PotentialSpec.from_dict({"kind": "anderson", "support": [-1, 0, 1], "seed": 4})
    assert spec.weights == pytest.approx((1 / 3,) * 3)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), N=st.integers(1, 60))
def test_anderson_bitwise_reproducible(seed, N):
    spec = PotentialSpec.bernoulli(1.0, seed=seed)
    a = sample_potential(spec, N).values
    np.testing.assert_array_equal(a, sample_potential(spec, N).values)
    assert np.all(np.abs(a) == 1.0)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.1, 5), omega=st.floats(0, 0.999), N=st.integers(1, 80))
def test_quasiperiodic_sup_bound(lam, omega, N):
    for spec in (PotentialSpec.fibonacci(lam, omega),
                 PotentialSpec.almost_mathieu(lam, GOLDEN_ALPHA, omega)):
        assert sample_potential(spec, N).norm_sup <= spec.sup_bound() + 1e-12
