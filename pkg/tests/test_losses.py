import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mangaface.errors import (
    EmptyBatch,
    LevelMismatch,
    NonFinite,
    OutOfRange,
    ShapeMismatch,
    ZeroDeviationWarning,
)
from mangaface.losses import (
    ATNObjectiveWeights,
    FeatureStack,
    GTNObjectiveWeights,
    SPLossWeights,
    SSLossParams,
    atn_objective,
    characteristic_loss,
    cycle_loss,
    gtn_objective,
    lsgan_loss,
    sp_loss,
    ss_loss,
)

T = lambda a: torch.as_tensor(a, dtype=torch.float64)


def finite_difference_gradient(fn, x: torch.Tensor, h: float) -> torch.Tensor:
    """Central differences, one coordinate at a time."""
    g = torch.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        hi = fn(x).item()
        flat[i] = orig - h
        lo = fn(x).item()
        flat[i] = orig
        gf[i] = (hi - lo) / (2.0 * h)
    return g


def assert_gradient_matches(fn, x: torch.Tensor, h: float, rtol: float = 1e-4):
    xg = x.clone().requires_grad_(True)
    fn(xg).backward()
    analytic = xg.grad.detach()
    numeric = finite_difference_gradient(fn, x.clone(), h)
    denom = max(analytic.norm().item(), numeric.norm().item(), 1e-8)
    assert (analytic - numeric).norm().item() / denom < rtol


# --- lsgan -------------------------------------------------------------------

def test_lsgan_perfect_discriminator_is_zero():
    assert lsgan_loss(T(np.ones((4, 3, 3))), T(np.zeros((4, 3, 3)))).item() == 0.0


def test_lsgan_inverted_discriminator_is_two():
    assert lsgan_loss(T(np.zeros((4, 3, 3))), T(np.ones((4, 3, 3)))).item() == 2.0


def test_lsgan_matches_elementwise_oracle(rng):
    d_real = rng.normal(0.5, 1.0, (2, 3, 3))
    d_fake = rng.normal(0.2, 1.0, (2, 3, 3))
    expected = np.mean((d_real - 1.0) ** 2) + np.mean(d_fake**2)
    assert lsgan_loss(T(d_real), T(d_fake)).item() == pytest.approx(expected, abs=1e-9)


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 999))
def test_lsgan_nonnegative_and_batch_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    d_real, d_fake = r.normal(size=(5, 2, 2)), r.normal(size=(5, 2, 2))
    v = lsgan_loss(T(d_real), T(d_fake)).item()
    assert v >= 0.0
    perm = r.permutation(5)
    assert lsgan_loss(T(d_real[perm]), T(d_fake[perm])).item() == pytest.approx(v, abs=1e-12)


def test_lsgan_rejects_empty_and_mismatched():
    with pytest.raises(EmptyBatch):
        lsgan_loss(T(np.zeros((0, 2, 2))), T(np.zeros((1, 2, 2))))
    with pytest.raises(ShapeMismatch):
        lsgan_loss(T(np.zeros((2, 2, 2))), T(np.zeros((2, 3, 3))))


# --- cycle -------------------------------------------------------------------

def test_cycle_identity_reconstruction_is_zero(rng):
    p = T(rng.uniform(0, 255, (2, 4, 4)))
    m = T(rng.uniform(0, 255, (3, 4, 4)))
    assert cycle_loss(p, m, p.clone(), m.clone()).item() == 0.0


def test_cycle_single_pixel_arithmetic():
    p, p_rec = T([[[100.0]]]), T([[[90.0]]])
    m = m_rec = T([[[7.0]]])
    assert cycle_loss(p, m, p_rec, m_rec).item() == pytest.approx(10.0, abs=1e-12)


def test_cycle_matches_l1_oracle(rng):
    p, m = rng.uniform(0, 255, (3, 8, 8)), rng.uniform(0, 255, (3, 8, 8))
    pr, mr = rng.uniform(0, 255, (3, 8, 8)), rng.uniform(0, 255, (3, 8, 8))
    expected = np.abs(pr - p).mean() + np.abs(mr - m).mean()
    got = cycle_loss(T(p), T(m), T(pr), T(mr)).item()
    assert got == pytest.approx(expected, abs=1e-9)


def test_cycle_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        cycle_loss(T(np.zeros((1, 2, 2))), T(np.zeros((1, 2, 2))),
                   T(np.zeros((1, 3, 3))), T(np.zeros((1, 2, 2))))


# --- structural smoothing ------------------------------------------------------

def test_ss_gray_exceeds_black():
    gray = T(np.full((1, 4, 4), 127.5))
    black = T(np.zeros((1, 4, 4)))
    assert ss_loss(gray, gray).item() > ss_loss(black, black).item()


def test_ss_gradient_zero_at_mid_gray():
    x = T(np.full((1, 2, 2), 127.5)).requires_grad_(True)
    y = T(np.full((1, 2, 2), 127.5))
    ss_loss(x, y).backward()
    assert x.grad.abs().max().item() == 0.0


def test_ss_matches_closed_form_oracle():
    # frozen from a term-by-term evaluation on pixels {0, 64, 127.5, 255},
    # sigma 42.5, both directions equal
    x = T(np.array([0.0, 64.0, 127.5, 255.0]).reshape(1, 2, 2))
    got_sum = ss_loss(x, x, SSLossParams(sigma=42.5, reduction="sum")).item()
    got_mean = ss_loss(x, x, SSLossParams(sigma=42.5, reduction="mean")).item()
    assert got_sum == pytest.approx(0.025339725704182928, abs=1e-12)
    assert got_mean == pytest.approx(0.006334931426045732, abs=1e-12)


def test_ss_strictly_decreasing_away_from_mu(rng):
    params = SSLossParams()
    base = np.full((1, 3, 3), 127.5)
    values = []
    for delta in (0.0, 20.0, 60.0, 127.5):
        img = T(base + delta)
        values.append(ss_loss(img, img, params).item())
    assert all(a > b for a, b in zip(values, values[1:]))


def test_ss_minimum_iff_saturated(rng):
    params = SSLossParams()
    saturated = T(np.where(rng.uniform(size=(1, 4, 4)) < 0.5, 0.0, 255.0))
    lo = ss_loss(saturated, saturated, params).item()
    off = saturated.clone()
    off[0, 0, 0] = 200.0
    assert ss_loss(off, off, params).item() > lo


def test_ss_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        ss_loss(T(np.full((1, 2, 2), 256.0)), T(np.zeros((1, 2, 2))))


def test_ss_params_validation():
    with pytest.raises(OutOfRange):
        SSLossParams(sigma=0.0)
    with pytest.raises(OutOfRange):
        SSLossParams(mu=100.0)


# --- similarity preserving -------------------------------------------------------

def _stack(arrs):
    return FeatureStack([T(a) for a in arrs])


def test_sp_identical_inputs_zero(rng):
    x = rng.uniform(0, 255, (1, 8, 8))
    f = [rng.normal(size=(1, 2, 4, 4)), rng.normal(size=(1, 4, 2, 2))]
    w = SPLossWeights(lambda_pixel=1.0, lambda_feat={1: 0.7, 2: 0.3})
    assert sp_loss(T(x), T(x), _stack(f), _stack(f), w).item() == 0.0


def test_sp_zero_weights_zero(rng):
    x, y = rng.uniform(0, 255, (1, 8, 8)), rng.uniform(0, 255, (1, 8, 8))
    fx = [rng.normal(size=(1, 2, 4, 4))]
    fy = [rng.normal(size=(1, 2, 4, 4))]
    w = SPLossWeights(lambda_pixel=0.0, lambda_feat={1: 0.0})
    assert sp_loss(T(x), T(y), _stack(fx), _stack(fy), w).item() == 0.0


def test_sp_matches_direct_summation_oracle(rng):
    x, y = rng.uniform(0, 255, (2, 8, 8)), rng.uniform(0, 255, (2, 8, 8))
    fx = [rng.normal(size=(2, 3, 4, 4)), rng.normal(size=(2, 6, 2, 2))]
    fy = [rng.normal(size=(2, 3, 4, 4)), rng.normal(size=(2, 6, 2, 2))]
    w = SPLossWeights(lambda_pixel=0.5, lambda_feat={1: 2.0, 2: 0.25})
    expected = (0.5 * np.mean((x - y) ** 2)
                + 2.0 * np.mean((fx[0] - fy[0]) ** 2)
                + 0.25 * np.mean((fx[1] - fy[1]) ** 2))
    got = sp_loss(T(x), T(y), _stack(fx), _stack(fy), w).item()
    assert got == pytest.approx(expected, abs=1e-9)


def test_sp_mismatches_rejected(rng):
    x = rng.uniform(0, 255, (1, 8, 8))
    fx = _stack([rng.normal(size=(1, 2, 4, 4))])
    fy2 = _stack([rng.normal(size=(1, 2, 4, 4)), rng.normal(size=(1, 2, 2, 2))])
    with pytest.raises(ShapeMismatch):
        sp_loss(T(x), T(rng.uniform(0, 255, (1, 4, 4))), fx, fx)
    with pytest.raises(LevelMismatch):
        sp_loss(T(x), T(x), fx, fy2)
    with pytest.raises(LevelMismatch):
        FeatureStack([T(np.zeros((1, 2, 4, 4))), T(np.zeros((1, 2, 3, 3)))])


# --- objectives -------------------------------------------------------------------

def test_atn_objective_zero_parts():
    assert atn_objective(0, 0, 0, 0, 0, 0).item() == 0.0


def test_atn_objective_reference_weights_sum_to_23():
    # alpha = (10, 5, 5, 1) with every part 1: 1 + 1 + 10 + 5 + 5 + 1 = 23
    w = ATNObjectiveWeights()
    assert (w.alpha1, w.alpha2, w.alpha3, w.alpha4) == (10.0, 5.0, 5.0, 1.0)
    assert atn_objective(1, 1, 1, 1, 1, 1, w).item() == pytest.approx(23.0, abs=1e-12)


def test_atn_objective_matches_weighted_sum(rng):
    parts = rng.normal(size=6)
    w = ATNObjectiveWeights(*rng.uniform(0, 5, 4))
    expected = (parts[0] + parts[1] + w.alpha1 * parts[2] + w.alpha2 * parts[3]
                + w.alpha3 * parts[4] + w.alpha4 * parts[5])
    assert atn_objective(*parts, w).item() == pytest.approx(expected, abs=1e-12)


def test_atn_objective_rejects_nonfinite():
    with pytest.raises(NonFinite):
        atn_objective(1, float("nan"), 0, 0, 0, 0)


def test_gtn_objective_zero_parts():
    parts = {f"{a}_{k}": 0.0 for a in ("loc", "siz", "sha")
             for k in ("adv_p", "adv_m", "cyc", "cha_p", "cha_m")}
    assert gtn_objective(parts).item() == 0.0


def test_gtn_objective_reference_weights_sum_to_42():
    # beta = (10, 1, 10, 1, 10, 1) with every part 1:
    # 3 * (1 + 1) + 10 * 3 + 1 * 3 * 2 = 42
    w = GTNObjectiveWeights()
    assert w.as_tuple == (10.0, 1.0, 10.0, 1.0, 10.0, 1.0)
    parts = {f"{a}_{k}": 1.0 for a in ("loc", "siz", "sha")
             for k in ("adv_p", "adv_m", "cyc", "cha_p", "cha_m")}
    assert gtn_objective(parts, w).item() == pytest.approx(42.0, abs=1e-12)


def test_gtn_objective_matches_weighted_sum(rng):
    vals = {f"{a}_{k}": float(v) for (a, k), v in zip(
        [(a, k) for a in ("loc", "siz", "sha")
         for k in ("adv_p", "adv_m", "cyc", "cha_p", "cha_m")],
        rng.normal(size=15))}
    w = GTNObjectiveWeights(*rng.uniform(0, 4, 6))
    expected = 0.0
    for i, a in enumerate(("loc", "siz", "sha")):
        expected += vals[f"{a}_adv_p"] + vals[f"{a}_adv_m"]
        expected += w.as_tuple[2 * i] * vals[f"{a}_cyc"]
        expected += w.as_tuple[2 * i + 1] * (vals[f"{a}_cha_p"] + vals[f"{a}_cha_m"])
    assert gtn_objective(vals, w).item() == pytest.approx(expected, abs=1e-12)


def test_weights_reject_negative():
    with pytest.raises(OutOfRange):
        ATNObjectiveWeights(alpha1=-1.0)
    with pytest.raises(OutOfRange):
        GTNObjectiveWeights(beta6=-0.5)
    with pytest.raises(OutOfRange):
        SPLossWeights(lambda_pixel=-1.0)


# --- characteristic ---------------------------------------------------------------

def test_characteristic_parallel_antiparallel_orthogonal():
    mean_src = T(np.zeros(3))
    mean_dst = T(np.zeros(3))
    xi = T([[1.0, 0.0, 0.0]])
    assert characteristic_loss(xi, T([[2.0, 0.0, 0.0]]), mean_src, mean_dst).item() \
        == pytest.approx(0.0, abs=1e-12)
    assert characteristic_loss(xi, T([[-3.0, 0.0, 0.0]]), mean_src, mean_dst).item() \
        == pytest.approx(2.0, abs=1e-12)
    assert characteristic_loss(xi, T([[0.0, 5.0, 0.0]]), mean_src, mean_dst).item() \
        == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 999), st.floats(0.01, 100.0))
def test_characteristic_range_and_scale_invariance(seed, scale):
    r = np.random.default_rng(seed)
    xi, gen = r.normal(size=(4, 6)), r.normal(size=(4, 6))
    ms, md = r.normal(size=6), r.normal(size=6)
    v = characteristic_loss(T(xi), T(gen), T(ms), T(md)).item()
    assert -1e-12 <= v <= 2.0 + 1e-12
    scaled = characteristic_loss(T(ms + (xi - ms) * scale), T(gen), T(ms), T(md)).item()
    assert scaled == pytest.approx(v, rel=1e-8, abs=1e-9)


def test_characteristic_skips_zero_deviation():
    ms, md = T(np.zeros(2)), T(np.zeros(2))
    xi = T([[0.0, 0.0], [1.0, 0.0]])
    gen = T([[1.0, 1.0], [2.0, 0.0]])
    with pytest.warns(ZeroDeviationWarning):
        v = characteristic_loss(xi, gen, ms, md).item()
    assert v == pytest.approx(0.0, abs=1e-12)  # only the parallel sample survives
    with pytest.warns(ZeroDeviationWarning):
        allzero = characteristic_loss(T([[0.0, 0.0]]), gen[:1], ms, md).item()
    assert allzero == 0.0


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 999))
def test_losses_batch_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    perm = r.permutation(4)
    p, m = r.uniform(0, 255, (4, 3, 3)), r.uniform(0, 255, (4, 3, 3))
    pr, mr = r.uniform(0, 255, (4, 3, 3)), r.uniform(0, 255, (4, 3, 3))
    assert cycle_loss(T(p[perm]), T(m[perm]), T(pr[perm]), T(mr[perm])).item() == \
        pytest.approx(cycle_loss(T(p), T(m), T(pr), T(mr)).item(), abs=1e-12)
    assert ss_loss(T(p[perm]), T(m[perm])).item() == \
        pytest.approx(ss_loss(T(p), T(m)).item(), abs=1e-12)
    xi, gen = r.normal(size=(4, 5)), r.normal(size=(4, 5))
    ms, md = r.normal(size=5), r.normal(size=5)
    assert characteristic_loss(T(xi[perm]), T(gen[perm]), T(ms), T(md)).item() == \
        pytest.approx(characteristic_loss(T(xi), T(gen), T(ms), T(md)).item(), abs=1e-12)


# --- gradient checks ----------------------------------------------------------------

H_IMAGE = 1e-3   # [0, 255] scale
H_VECTOR = 1e-5  # unit scale


def test_gradcheck_lsgan(rng):
    d_fake = T(rng.normal(0.3, 0.5, (2, 3, 3)))
    assert_gradient_matches(lambda x: lsgan_loss(x, d_fake),
                            T(rng.normal(0.5, 0.5, (2, 3, 3))), H_VECTOR)


def test_gradcheck_cycle(rng):
    p = T(rng.uniform(10, 245, (1, 4, 4)))
    m = T(rng.uniform(10, 245, (1, 4, 4)))
    m_rec = T(rng.uniform(10, 245, (1, 4, 4)))
    assert_gradient_matches(lambda x: cycle_loss(p, m, x, m_rec),
                            T(rng.uniform(10, 245, (1, 4, 4))), H_IMAGE)


def test_gradcheck_ss(rng):
    x = T(rng.uniform(5, 250, (1, 4, 4)))
    y = T(rng.uniform(5, 250, (1, 4, 4)))
    for reduction in ("mean", "sum"):
        params = SSLossParams(reduction=reduction)
        assert_gradient_matches(lambda v: ss_loss(v, y, params), x.clone(), H_IMAGE)


def test_gradcheck_sp(rng):
    y = T(rng.uniform(0, 255, (1, 6, 6)))
    fy = _stack([rng.normal(size=(1, 2, 3, 3))])
    w = SPLossWeights(lambda_pixel=1.0, lambda_feat={1: 2.0})

    def fn(x):
        # a fixed differentiable surrogate for the extractor
        fx = FeatureStack([torch.stack([x[:, :3, :3] * 0.5 + 1.0,
                                        x[:, 3:, 3:] * -0.25], dim=1)])
        return sp_loss(x, y, fx, fy, w)

    assert_gradient_matches(fn, T(rng.uniform(0, 255, (1, 6, 6))), H_IMAGE)


def test_gradcheck_characteristic(rng):
    ms, md = T(rng.normal(size=5)), T(rng.normal(size=5))
    gen = T(rng.normal(size=(3, 5)))
    assert_gradient_matches(lambda x: characteristic_loss(x, gen, ms, md),
                            T(rng.normal(size=(3, 5)) * 2 + 1), H_VECTOR)
