import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyfactor.catalog import (
    default_fixtures,
    make_comp_poisson_exp,
    make_gamma,
    make_gaussian,
    make_K_measure,
    make_laplace_series,
    make_L_not_Lf,
    make_levy_area,
    make_stable,
    make_sym_gamma,
    make_wenocur,
)
from levyfactor.core import POS, LevyTriple, SpectralDensityPair, Verdict
from levyfactor.errors import NonDifferentiable, ParamOutOfRange, Undecidable
from levyfactor.factorization import convolve
from levyfactor.membership import chain_order, check_Lf_via_second_derivative, classify, is_ID_log

YES, NO = Verdict.YES, Verdict.NO
FIXTURES = default_fixtures()
CHAIN = chain_order(2)


def verdicts(report, upto=None):
    keys = CHAIN if upto is None else CHAIN[: CHAIN.index(upto) + 1]
    return {k: report[k] for k in keys}


# --------------------------------------------------------------------------
# independent oracle: high-precision derivatives in y = log r
#
# With Q(y) = r m(r), the level-n quantity is (-d/dy)^n Q and class L_n asks
# each of them to be nonincreasing.  The J-inverse replaces r m by Q - Q'.


def mp_oracle(m, max_n=2, lo=-6.0, hi=3.5, nodes=60):
    mp.mp.dps = 30
    Q = lambda y: mp.exp(y) * m(mp.exp(y))
    P = lambda y: Q(y) - mp.diff(Q, y)
    ys = [mp.mpf(lo) + (hi - lo) * mp.mpf(i) / (nodes - 1) for i in range(nodes)]

    def nonincreasing(F, k):
        return all((-1) ** k * mp.diff(F, y, k + 1) <= 0 for y in ys)

    out = {"U": nonincreasing(lambda y: m(mp.exp(y)), 0), "L": nonincreasing(Q, 0)}
    out["Lf"] = out["L"] and nonincreasing(P, 0)
    prev = out["Lf"]
    for k in range(1, max_n + 1):
        out[f"L{k}"] = prev and nonincreasing(Q, k)
        out[f"L{k}f"] = prev = out[f"L{k}"] and nonincreasing(P, k)
    return {k: YES if v else NO for k, v in out.items()}


def test_levy_area_classes_against_oracle():
    got = verdicts(classify(make_levy_area(1.0).triple))
    assert got == mp_oracle(lambda r: 1 / (r * mp.expm1(mp.pi * r)))
    assert all(v is YES for v in got.values())


def test_wenocur_classes_against_oracle():
    got = verdicts(classify(make_wenocur().triple))
    assert got == mp_oracle(lambda r: 1 / (4 * r * mp.sinh(mp.pi * r / 2)))
    assert got["L2"] is YES and got["L2f"] is NO


def test_gamma_classes_against_oracle():
    got = verdicts(classify(make_gamma(2.0, 1.0).triple))
    assert got == mp_oracle(lambda r: 2 * mp.exp(-r) / r)


# --------------------------------------------------------------------------
# ID_log


def test_gaussian_is_ID_log():
    assert is_ID_log(make_gaussian(1.0).triple) is YES


def test_gamma_is_ID_log():
    assert is_ID_log(make_gamma(2.0, 1.0).triple, 1) is YES
    assert is_ID_log(make_gamma(2.0, 1.0).triple, 3) is YES


def test_log_squared_tail_is_not_ID_log():
    # partial sums of int_e^R log(1+r) / (r log^2 r) dr grow like log log R
    f = lambda r: np.where(r > math.e, 1.0 / (r * np.log(np.maximum(r, math.e)) ** 2), 0.0)
    triple = LevyTriple(0.0, 0.0, SpectralDensityPair(f, breaks=(math.e,)))
    assert is_ID_log(triple) is NO
    report = classify(triple, max_n=0)
    assert report["ID_log"] is NO
    assert report.witness_for("ID_log") is not None


def test_log_moment_order_matters():
    # tail r^-1 log^-3 r has log^1 moment but not log^2
    f = lambda r: np.where(r > math.e, 1.0 / (r * np.log(np.maximum(r, math.e)) ** 3), 0.0)
    triple = LevyTriple(0.0, 0.0, SpectralDensityPair(f, breaks=(math.e,)))
    assert is_ID_log(triple, 1) is YES
    assert is_ID_log(triple, 2) is NO


def test_fast_log_tail_is_ID_log():
    f = lambda r: np.where(r > math.e, 1.0 / (r * np.log(np.maximum(r, math.e)) ** 2.5), 0.0)
    assert is_ID_log(LevyTriple(0.0, 0.0, SpectralDensityPair(f, breaks=(math.e,)))) is YES


def test_borderline_tail_is_undecidable():
    f = lambda r: np.where(r > math.e, 1.0 / (r * np.log(np.maximum(r, math.e)) ** 2.02), 0.0)
    triple = LevyTriple(0.0, 0.0, SpectralDensityPair(f, breaks=(math.e,)))
    with pytest.raises(Undecidable):
        is_ID_log(triple)


def test_cauchy_has_log_moment():
    assert is_ID_log(make_stable(1.0).triple) is YES


# --------------------------------------------------------------------------
# classify


def test_gamma_verdicts():
    r = classify(make_gamma(2.0, 1.0).triple)
    assert (r["U"], r["L"], r["Lf"], r["L1"]) == (YES, YES, YES, NO)
    w = r.witness_for("L1")
    assert w is not None and w.direction == POS


def test_gamma_L1_failure_brute_force():
    # driver density lam alpha e^{-lam r}; r times it rises on (0, 1/lam)
    alpha, lam = 2.0, 1.0
    r = np.geomspace(1e-6, 1e3, 400)
    q1 = r * alpha * lam * np.exp(-lam * r)
    assert np.any(np.diff(q1) > 0)
    assert np.all(np.diff(q1)[r[1:] < 0.9 / lam] > 0)


def test_compound_poisson_verdicts():
    r = classify(make_comp_poisson_exp(2.0, 1.0).triple)
    assert r["U"] is YES and r["L"] is NO
    w = r.witness_for("L")
    assert w.interval[1] < 1.0 and w.magnitude > 0


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 1.5, 1.9])
def test_stable_is_in_every_class(alpha):
    r = classify(make_stable(alpha).triple, max_n=3)
    assert all(v is YES for v in r.verdicts.values())
    # the fourth level amplifies differencing noise: it may be undecided, never "no"
    deep = classify(make_stable(alpha).triple, max_n=4)
    assert all(v is not NO for v in deep.verdicts.values())


def test_atoms_exclude_every_class():
    triple = LevyTriple(0.0, 0.0, SpectralDensityPair(atoms=((1.0, 2.0),)))
    r = classify(triple, max_n=1)
    assert r["U"] is NO and r.witness_for("U").interval == (1.0, 1.0)


def test_max_n_bounds():
    with pytest.raises(ParamOutOfRange):
        classify(make_gamma().triple, max_n=5)
    r = classify(make_gamma().triple, max_n=0)
    assert list(r.verdicts) == ["ID_log", "U", "L", "Lf"]


def test_gaussian_part_is_ignored():
    base = classify(make_gamma(1.0, 1.0).triple).verdicts
    assert classify(make_gamma(1.0, 1.0).triple + LevyTriple(5.0, 3.0)).verdicts == base


def test_every_no_has_a_witness():
    for spec in FIXTURES:
        r = classify(spec.triple)
        for cls, v in r.verdicts.items():
            if v is NO:
                assert r.witness_for(cls) is not None, (spec.name, cls)


# --------------------------------------------------------------------------
# second-derivative route


@pytest.mark.parametrize(
    "spec",
    [make_gamma(2.0, 1.0), make_stable(1.5), make_laplace_series((1.0, 0.3, 0.1)), make_sym_gamma(0.5)],
    ids=lambda s: s.name,
)
def test_second_derivative_route_yes(spec):
    assert check_Lf_via_second_derivative(spec.triple) is YES


def test_second_derivative_route_separates_L_not_Lf():
    assert check_Lf_via_second_derivative(make_L_not_Lf().triple) is NO


def test_second_derivative_route_agrees_with_classify():
    smooth = [s for s in FIXTURES if not s.triple.spectral.breaks and not s.triple.spectral.atoms]
    for spec in smooth:
        assert check_Lf_via_second_derivative(spec.triple) is classify(spec.triple, max_n=0)["Lf"], spec.name


def test_second_derivative_route_rejects_hidden_kink():
    f = lambda r: np.exp(-r) / r * (1 + 0.5 * np.maximum(r - 1.0, 0.0) ** 1.5)
    triple = LevyTriple(0.0, 0.0, SpectralDensityPair(f))
    with pytest.raises(NonDifferentiable):
        check_Lf_via_second_derivative(triple)


# --------------------------------------------------------------------------
# invariants


def assert_chain_monotone(report):
    seen_no = False
    for cls in chain_order(report.max_n):
        if seen_no:
            assert report[cls] is not YES, cls
        seen_no = seen_no or report[cls] is NO


@pytest.mark.parametrize("spec", FIXTURES, ids=lambda s: s.name)
def test_chain_and_known_classes(spec):
    r = classify(spec.triple)
    assert_chain_monotone(r)
    assert r.verdicts == spec.known_classes


@pytest.mark.parametrize("a", [0.1, 2.0, 10.0])
def test_dilation_invariance(a):
    for spec in FIXTURES:
        assert classify(spec.triple.dilate(a)).verdicts == classify(spec.triple).verdicts, spec.name


@settings(max_examples=15)
@given(st.floats(0.05, 20.0), st.floats(0.2, 4.0), st.floats(0.2, 4.0))
def test_dilation_invariance_property(a, alpha, lam):
    triple = make_gamma(alpha, lam).triple
    assert classify(triple.dilate(a), max_n=1).verdicts == classify(triple, max_n=1).verdicts


def test_convolution_closure_of_Lf():
    lf = [s for s in FIXTURES if s.known_classes["Lf"] is YES]
    assert len(lf) >= 8
    for i, a in enumerate(lf):
        for b in lf[i:]:
            assert classify(convolve(a.triple, b.triple), max_n=0)["Lf"] is YES, (a.name, b.name)


@settings(max_examples=15)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_K_measure_is_Lf(beta, alpha, scale):
    spec = make_K_measure(alpha, beta, sign=1 if scale > 1 else -1)
    r = classify(spec.triple, max_n=0)
    assert r["Lf"] is YES
