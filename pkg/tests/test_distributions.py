import numpy as np
import pytest
import scipy.stats

from safespread import (
    BetaCdf,
    MixtureCdf,
    NormalCdf,
    TruncExpCdf,
    UniformCdf,
)

ALL_LAWS = [
    UniformCdf(0.0, 1.0),
    UniformCdf(-2.0, 3.0),
    BetaCdf(2.0, 5.0),
    BetaCdf(0.5, 0.5, loc=1.0, scale=2.0),
    TruncExpCdf(rate=1.5, cap=3.0),
    TruncExpCdf(rate=0.7, cap=2.0, loc=-1.0, scale=4.0),
    NormalCdf(0.0, 1.0),
    NormalCdf(-3.0, 0.25),
    MixtureCdf((UniformCdf(0.0, 1.0), UniformCdf(0.0, 2.0))),
    MixtureCdf(
        (BetaCdf(2.0, 5.0), TruncExpCdf(rate=1.0, cap=1.0), UniformCdf(0.2, 0.8)),
        weights=(0.5, 0.25, 0.25),
    ),
]


def test_uniform_matches_closed_form():
    law = UniformCdf(1.0, 3.0)
    assert law.cdf(1.0) == 0.0
    assert law.cdf(2.0) == 0.5
    assert law.cdf(3.0) == 1.0
    assert law.cdf(0.0) == 0.0
    assert law.cdf(9.0) == 1.0
    assert law.quantile(0.25) == pytest.approx(1.5)
    assert law.support() == (1.0, 3.0)


def test_uniform_rejects_empty_interval():
    with pytest.raises(ValueError):
        UniformCdf(2.0, 2.0)
    with pytest.raises(ValueError):
        UniformCdf(3.0, 1.0)


def test_beta_matches_scipy():
    law = BetaCdf(2.0, 5.0)
    ref = scipy.stats.beta(2.0, 5.0)
    x = np.linspace(0.0, 1.0, 41)
    np.testing.assert_allclose(law.cdf(x), ref.cdf(x), atol=1e-12)
    p = np.linspace(0.01, 0.99, 23)
    np.testing.assert_allclose(law.quantile(p), ref.ppf(p), atol=1e-10)


def test_trunc_exp_matches_conditioned_exponential():
    law = TruncExpCdf(rate=1.5, cap=3.0)
    ref = scipy.stats.truncexpon(b=1.5 * 3.0, scale=1.0 / 1.5)
    x = np.linspace(0.0, 3.0, 31)
    np.testing.assert_allclose(law.cdf(x), ref.cdf(x), atol=1e-12)


def test_normal_matches_scipy():
    law = NormalCdf(-1.0, 2.0)
    ref = scipy.stats.norm(-1.0, 2.0)
    x = np.linspace(-7.0, 5.0, 25)
    np.testing.assert_allclose(law.cdf(x), ref.cdf(x), atol=1e-12)
    np.testing.assert_allclose(law.quantile(0.975), ref.ppf(0.975), atol=1e-9)


def test_mixture_is_weighted_average_of_components():
    comps = (UniformCdf(0.0, 1.0), UniformCdf(0.0, 2.0))
    law = MixtureCdf(comps, weights=(0.25, 0.75))
    x = np.linspace(-0.5, 2.5, 61)
    want = 0.25 * comps[0].cdf(x) + 0.75 * comps[1].cdf(x)
    np.testing.assert_allclose(law.cdf(x), want, atol=1e-12)


@pytest.mark.parametrize("law", ALL_LAWS, ids=lambda l: type(l).__name__ + repr(l.support()))
def test_quantile_cdf_roundtrip(law):
    p = np.linspace(0.005, 0.995, 67)
    x = law.quantile(p)
    np.testing.assert_allclose(law.cdf(x), p, atol=5e-7)


@pytest.mark.parametrize("law", ALL_LAWS, ids=lambda l: type(l).__name__ + repr(l.support()))
def test_cdf_monotone_and_normalized(law):
    lo, hi = law.support()
    lo = max(lo, -1e8)
    hi = min(hi, 1e8)
    x = np.linspace(lo - 1.0, hi + 1.0, 301)
    fx = law.cdf(x)
    assert np.all(np.diff(fx) >= -1e-12)
    assert np.all(fx >= 0.0) and np.all(fx <= 1.0)
    assert law.cdf(hi + 1.0) == pytest.approx(1.0, abs=1e-9)
    assert law.cdf(lo - 1.0) == pytest.approx(0.0, abs=1e-9)


def test_affine_transforms_the_law():
    base = BetaCdf(2.0, 5.0)
    moved = base.affine(3.0, -1.0)
    x = np.linspace(-1.0, 2.0, 41)
    np.testing.assert_allclose(moved.cdf(x), base.cdf((x + 1.0) / 3.0), atol=1e-12)
    lo, hi = moved.support()
    assert lo == pytest.approx(-1.0)
    assert hi == pytest.approx(2.0)


def test_affine_requires_positive_scale():
    with pytest.raises(ValueError):
        UniformCdf(0.0, 1.0).affine(-1.0, 0.0)
    with pytest.raises(ValueError):
        UniformCdf(0.0, 1.0).affine(0.0, 0.0)


def test_sampling_follows_the_law():
    rng = np.random.default_rng(1234)
    for law in (UniformCdf(0.0, 1.0), BetaCdf(2.0, 5.0), MixtureCdf((UniformCdf(0, 1), UniformCdf(0, 2)))):
        draws = law.sample(rng, 4000)
        fx = law.cdf(np.sort(draws))
        grid = np.arange(1, 4001) / 4000.0
        ks = float(np.max(np.abs(fx - grid))) + 1.0 / 4000.0
        # 0.0364 is the 99.99% Kolmogorov band at this sample size
        assert ks < 2.0 / np.sqrt(4000)


def test_mixture_quantile_handles_flat_regions():
    # components with disjoint supports leave a flat stretch in the CDF
    law = MixtureCdf((UniformCdf(0.0, 1.0), UniformCdf(3.0, 4.0)))
    q = law.quantile(0.5)
    assert law.cdf(q) == pytest.approx(0.5, abs=1e-7)
    assert law.quantile(0.75) == pytest.approx(3.5, abs=1e-6)


def test_mixture_validates_weights():
    with pytest.raises(ValueError):
        MixtureCdf((UniformCdf(0, 1),), weights=(0.5,))
    with pytest.raises(ValueError):
        MixtureCdf((UniformCdf(0, 1), UniformCdf(0, 2)), weights=(0.7, 0.7))
    with pytest.raises(ValueError):
        MixtureCdf((), weights=())
