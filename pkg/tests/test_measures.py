"""Gaussian law multipliers, sampling moments, densities, and distances."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilwkit import dynamics, measures, rng, spectral
from ilwkit.hierarchy import evaluate


def zero_field(cutoff):
    return spectral.SpectralField(np.zeros(cutoff + 1, dtype=np.complex128))


class TestGaussianSpec:
    def test_regime_validation(self):
        with pytest.raises(ValueError):
            measures.GaussianSpec("abyssal", 2)
        with pytest.raises(ValueError):
            measures.GaussianSpec("deep", 0)
        with pytest.raises(ValueError):
            measures.GaussianSpec("deep", 2, -1.0)
        with pytest.raises(ValueError):
            measures.GaussianSpec("bo", 2, 3.0)
        with pytest.raises(ValueError):
            measures.GaussianSpec("shallow", 2, math.inf)

    def test_shallow_delta_zero_odd_rejected(self):
        with pytest.raises(ValueError, match="kdv"):
            measures.GaussianSpec("shallow", 3, 0.0)
        measures.GaussianSpec("shallow", 4, 0.0)

    def test_kdv_delta_pinned(self):
        assert measures.GaussianSpec("kdv", 2).delta == 0.0
        assert measures.GaussianSpec("kdv", 2, 0.0).delta == 0.0
        with pytest.raises(ValueError):
            measures.GaussianSpec("kdv", 2, 1.0)


SPECS = [
    measures.GaussianSpec("deep", 3, 2.0),
    measures.GaussianSpec("deep", 2, math.inf),
    measures.GaussianSpec("bo", 4),
    measures.GaussianSpec("shallow", 3, 0.5),
    measures.GaussianSpec("shallow", 4, 0.5),
    measures.GaussianSpec("shallow", 4, 0.0),
    measures.GaussianSpec("kdv", 2),
]


class TestMultiplier:
    @pytest.mark.parametrize("spec", SPECS, ids=str)
    def test_scalar_matches_vector(self, spec):
        vec = measures.t_vector(spec, 40)
        for n in (1, 2, 7, 40):
            assert measures.t_multiplier(spec, n) == pytest.approx(
                vec[n - 1], rel=1e-14
            )

    @pytest.mark.parametrize("spec", SPECS, ids=str)
    def test_positive_and_even(self, spec):
        assert np.all(measures.t_vector(spec, 60) > 0)
        assert measures.t_multiplier(spec, -5) == measures.t_multiplier(spec, 5)

    def test_mode_zero_rejected(self):
        with pytest.raises(ValueError):
            measures.t_multiplier(SPECS[0], 0)

    def test_deep_sandwich(self):
        # 0 < T <= n^k, and the relative gap shrinks as the depth grows
        n = np.arange(1, 41, dtype=float)
        for k in (2, 3, 4):
            gaps = {}
            for delta in (8.0, 64.0):
                t = measures.t_vector(measures.GaussianSpec("deep", k, delta), 40)
                assert np.all(t <= n**k + 1e-12 * n**k)
                gaps[delta] = (n**k - t) / n**k
            assert np.all(gaps[64.0] <= gaps[8.0] + 1e-15)

    def test_deep_limit_is_bo(self):
        t = measures.t_vector(measures.GaussianSpec("deep", 3, 1e8), 20)
        assert t == pytest.approx(np.arange(1, 21.0) ** 3, rel=1e-6)

    def test_shallow_even_dominates_kdv(self):
        t = measures.t_vector(measures.GaussianSpec("shallow", 4, 0.5), 30)
        assert np.all(t >= np.arange(1, 31.0) ** 4)

    def test_shallow_collapse_both_parities(self):
        # odd index 2*kappa-1 and even index 2*kappa both land on n^{2 kappa}
        kdv = measures.t_vector(measures.GaussianSpec("kdv", 2), 12)
        odd = measures.t_vector(measures.GaussianSpec("shallow", 3, 1e-4), 12)
        even = measures.t_vector(measures.GaussianSpec("shallow", 4, 1e-4), 12)
        assert odd == pytest.approx(kdv, rel=1e-4)
        assert even == pytest.approx(kdv, rel=1e-4)

    def test_small_depth_branch_continuity(self):
        # the series branch hands off to the closed form without a jump
        spec_lo = measures.GaussianSpec("deep", 2, 0.049 / 7)
        spec_hi = measures.GaussianSpec("deep", 2, 0.051 / 7)
        lo = measures.t_multiplier(spec_lo, 7)
        hi = measures.t_multiplier(spec_hi, 7)
        assert lo == pytest.approx(hi, rel=1e-3)


class TestSampler:
    def test_deterministic_and_independent(self):
        spec = measures.GaussianSpec("deep", 2, 4.0)
        a = measures.sample(spec, 16, 7, 3)
        b = measures.sample(spec, 16, 7, 3)
        c = measures.sample(spec, 16, 7, 4)
        assert np.array_equal(a.positive, b.positive)
        assert not np.array_equal(a.positive, c.positive)

    def test_truncations_are_nested(self):
        spec = measures.GaussianSpec("deep", 2, 4.0)
        small = measures.sample(spec, 8, 7, 0)
        large = measures.sample(spec, 32, 7, 0)
        assert np.array_equal(small.positive, large.positive[:8])

    def test_moment_identity(self):
        count = 2000
        grid = [
            (measures.GaussianSpec("deep", 2, 2.0), 32, 0.0),
            (measures.GaussianSpec("deep", 3, 8.0), 32, 0.5),
            (measures.GaussianSpec("shallow", 4, 0.5), 16, 1.0),
            (measures.GaussianSpec("kdv", 2), 16, 0.5),
        ]
        for spec, n, s in grid:
            vals = np.array(
                [
                    measures.sample(spec, n, 91, i).sobolev_norm(s) ** 2
                    for i in range(count)
                ]
            )
            exact = measures.expected_sobolev_sq(spec, n, s)
            se = vals.std(ddof=1) / math.sqrt(count)
            assert abs(vals.mean() - exact) < 3.0 * se

    def test_regularity_threshold(self):
        # at s = (k-1)/2 the second moment grows like log N; below it, it
        # saturates
        spec = measures.GaussianSpec("bo", 3)
        at = [measures.expected_sobolev_sq(spec, n, 1.0) for n in (64, 4096)]
        below = [measures.expected_sobolev_sq(spec, n, 0.5) for n in (64, 4096)]
        assert at[1] - at[0] > 4.0 * math.log(2)
        assert below[1] - below[0] < 0.1

    def test_count_validation(self):
        with pytest.raises(ValueError):
            measures.sample(SPECS[0], 0, 1)


class TestBump:
    def test_plateaus_and_glue(self):
        assert measures.eta_bump(0.0) == 1.0
        assert measures.eta_bump(1.0) == 1.0
        assert measures.eta_bump(2.0) == 0.0
        assert measures.eta_bump(5.0) == 0.0
        assert measures.eta_bump(1.5) == pytest.approx(0.5)
        xs = np.linspace(1.0, 2.0, 50)
        ys = [measures.eta_bump(float(x)) for x in xs]
        assert all(a >= b for a, b in zip(ys, ys[1:]))

    def test_sharp_variant(self):
        assert measures.eta_bump(1.9, "sharp") == 1.0
        assert measures.eta_bump(2.1, "sharp") == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            measures.eta_bump(-0.1)
        with pytest.raises(ValueError):
            measures.eta_bump(0.5, "boxcar")


class TestGibbsDensity:
    SPEC = measures.GaussianSpec("deep", 3, 2.0)

    def test_zero_field_weight_one(self):
        assert measures.gibbs_density(self.SPEC, zero_field(8), 8, 3.0) == 1.0

    def test_large_field_weight_zero(self):
        big = spectral.synthesize({1: 50.0 + 0j}).padded(8)
        assert measures.gibbs_density(self.SPEC, big, 8, 3.0) == 0.0

    def test_projection_inside(self):
        u = measures.sample(self.SPEC, 16, 5, 0)
        full = measures.gibbs_density(self.SPEC, u, 8, 5.0)
        trimmed = measures.gibbs_density(self.SPEC, u.trimmed(8), 8, 5.0)
        assert full == pytest.approx(trimmed, rel=1e-14)

    def test_sharp_dominates_smooth(self):
        u = measures.sample(self.SPEC, 8, 6, 1)
        k = 0.6 * u.l2_norm()
        sharp = measures.gibbs_density(self.SPEC, u, 8, k, "sharp")
        smooth = measures.gibbs_density(self.SPEC, u, 8, k, "smooth")
        assert sharp >= smooth

    def test_half_interaction_exponent(self):
        # the base law's per-mode variance is 2/T, so the invariant
        # combination tilts by half the interaction value; pin the factor
        u = measures.sample(self.SPEC, 8, 11, 2)
        inter = measures.interaction_density("deep", 3)
        r_val = evaluate(inter, u, 2.0)
        big_k = 10.0 * u.l2_norm()
        got = measures.gibbs_density(self.SPEC, u, 8, big_k)
        assert got == pytest.approx(math.exp(-0.5 * r_val), rel=1e-13)

    def test_index_one_rejected(self):
        spec = measures.GaussianSpec("deep", 1, 2.0)
        with pytest.raises(ValueError, match="renormalized"):
            measures.gibbs_density(spec, zero_field(8), 8, 3.0)

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            measures.gibbs_density(self.SPEC, zero_field(8), 8, 0.0)


class TestKakutani:
    def test_identical_specs_vanish(self):
        s = measures.kakutani_partial_sums(SPECS[0], SPECS[0], 64)
        assert np.all(s == 0.0)

    def test_partial_sums_monotone(self):
        a = measures.GaussianSpec("deep", 2, 4.0)
        b = measures.GaussianSpec("deep", 2, 8.0)
        s = measures.kakutani_partial_sums(a, b, 500)
        assert np.all(np.diff(s) >= 0)

    def test_deep_pair_saturates(self):
        a = measures.GaussianSpec("deep", 2, 4.0)
        b = measures.GaussianSpec("deep", 2, 8.0)
        s = measures.kakutani_partial_sums(a, b, 10**5)
        verdict = measures.classify_growth(s)
        assert not verdict["divergent"]
        assert verdict["slope"] < 0.01

    def test_shallow_odd_vs_kdv_diverges(self):
        a = measures.GaussianSpec("shallow", 3, 0.5)
        b = measures.GaussianSpec("kdv", 2)
        s = measures.kakutani_partial_sums(a, b, 10**5)
        verdict = measures.classify_growth(s)
        assert verdict["divergent"]
        # the multiplier ratio grows like n, so S_M grows like M^3
        assert verdict["slope"] == pytest.approx(3.0, abs=0.05)

    def test_shallow_even_pair_saturates(self):
        a = measures.GaussianSpec("shallow", 4, 0.5)
        b = measures.GaussianSpec("shallow", 4, 1.0)
        s = measures.kakutani_partial_sums(a, b, 10**5)
        assert not measures.classify_growth(s)["divergent"]

    def test_classifier_needs_history(self):
        with pytest.raises(ValueError):
            measures.classify_growth(np.ones(5))


class TestKullbackLeibler:
    def test_validation(self):
        with pytest.raises(ValueError):
            measures.kl_gaussian(2, math.inf)
        with pytest.raises(ValueError):
            measures.kl_gaussian(2, 0.0)
        with pytest.raises(ValueError):
            measures.kl_gaussian(0, 2.0)

    def test_strictly_decreasing_in_depth(self):
        vals = [measures.kl_gaussian(2, d) for d in (2.0, 8.0, 32.0, 128.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_tolerance_consistency(self):
        coarse = measures.kl_gaussian(3, 2.0, tol=1e-6)
        fine = measures.kl_gaussian(3, 2.0, tol=1e-12)
        assert abs(coarse - fine) < 1e-6

    @pytest.mark.parametrize("k,delta", [(2, 2.0), (3, 2.0), (2, 0.7), (4, 5.0)])
    def test_against_brute_force(self, k, delta):
        cert = measures.kl_gaussian(k, delta, tol=1e-10)
        m = 10**7
        total = 0.0
        chunk = 1 << 21
        for lo in range(1, m + 1, chunk):
            n = np.arange(lo, min(lo + chunk, m + 1), dtype=np.float64)
            eps = measures.ratio_gap(k, delta, n)
            total += float(np.sum(eps - np.log1p(eps)))
        # eps_n <= 2k/(delta n) gives tail phi-sum <= 2 k^2/(delta^2 M)
        tail_bound = 2.0 * k * k / (delta * delta * m)
        assert total <= cert + 1e-9
        assert cert <= total + tail_bound + 1e-9

    def test_gap_stable_at_extreme_modes(self):
        # naive n^k/T - 1 underflows to 0 here; the stable path keeps the
        # leading 3/(2 delta n) behavior
        eps = measures.ratio_gap(2, 2.0, np.array([1.0e9]))[0]
        assert eps == pytest.approx(1.5 / (2.0 * 1.0e9), rel=1e-3)


class TestTwoPairSum:
    @given(
        st.integers(min_value=2, max_value=24),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=40, deadline=None)
    def test_cancels_for_every_weight_vector(self, count, seed):
        w = np.random.default_rng(seed).exponential(size=count)
        spec = measures.GaussianSpec("deep", 3, 2.0)
        assert abs(measures.two_pair_sum(spec, count, w)) < 1e-12

    def test_weight_shape_checked(self):
        with pytest.raises(ValueError):
            measures.two_pair_sum(SPECS[0], 8, np.ones(7))


class TestAsymptoticConservation:
    def test_validation(self):
        with pytest.raises(ValueError):
            measures.asymptotic_conservation("bo", 3, 2.0, 8, 2.0, 4, 1)
        with pytest.raises(ValueError):
            measures.asymptotic_conservation("deep", 1, 2.0, 8, 2.0, 4, 1)

    def test_smoke_with_audit(self):
        rep = measures.asymptotic_conservation(
            "deep", 2, 2.0, 8, 2.0, 12, seed=7, audit=2, audit_dt=2e-3
        )
        assert rep["estimate"] > 0
        assert rep["stderr"] > 0
        assert len(rep["audit"]) == 2
        for entry in rep["audit"]:
            # centered differences contract like dt^2
            assert entry["err_half"] < entry["err"]
            assert entry["err"] / entry["err_half"] == pytest.approx(4.0, abs=1.5)
            assert entry["err"] < 2e-2 * max(1.0, abs(entry["value"]))

    def test_statistic_decays_in_cutoff(self):
        reps = [
            measures.asymptotic_conservation(
                "deep", 3, 2.0, n, 2.0, 24, seed=11, audit=0
            )
            for n in (8, 16)
        ]
        assert reps[1]["estimate"] < reps[0]["estimate"]

    def test_shallow_regime_runs(self):
        rep = measures.asymptotic_conservation(
            "shallow", 2, 0.5, 8, 2.0, 8, seed=3, audit=1, audit_dt=2e-3
        )
        assert rep["audit"][0]["err_half"] < rep["audit"][0]["err"]


class TestInvarianceBattery:
    def test_smoke_report(self):
        rep = measures.invariance_battery(
            "deep", 3, 2.0, count=8, t_final=0.2, samples=24, seed=9, big_k=7.0,
            dt=2e-3,
        )
        assert set(rep["observables"]) == {
            "l2_sq",
            "h_half_low",
            "mode1_abs_sq",
            "mode2_re",
            "interaction_low",
        }
        assert 0 < rep["effective_samples"] <= 24
        assert rep["alive"] <= 24
        assert rep["obs_cutoff"] == 8
        # the truncated flow conserves the L2 norm exactly, so that row's
        # drift is integrator-level no matter how skewed the weights are
        row = rep["observables"]["l2_sq"]
        assert abs(row["drift"]) < 1e-7
        for row in rep["observables"].values():
            assert row["stderr"] >= 0

    def test_fixed_observation_window(self):
        rep = measures.invariance_battery(
            "deep", 3, 2.0, count=12, t_final=0.1, samples=16, seed=9,
            big_k=7.0, dt=2e-3, obs_cutoff=4,
        )
        assert rep["obs_cutoff"] == 4
        with pytest.raises(ValueError, match="observation cutoff"):
            measures.invariance_battery(
                "deep", 3, 2.0, count=8, t_final=0.1, samples=4, seed=9,
                big_k=7.0, obs_cutoff=9,
            )

    def test_weights_match_gibbs_density(self):
        # the battery fuses the weight exponent with the interaction
        # observable; its effective sample size must agree with weights
        # recomputed through the public density
        rep = measures.invariance_battery(
            "deep", 3, 2.0, count=8, t_final=0.05, samples=20, seed=3,
            big_k=2.0, dt=2e-3,
        )
        spec = measures.GaussianSpec("deep", 3, 2.0)
        w = np.array(
            [
                measures.gibbs_density(spec, measures.sample(spec, 8, 3, i), 8, 2.0)
                for i in range(20)
            ]
        )
        w = w[w > 0]
        assert len(w) == rep["alive"]
        ess = w.sum() ** 2 / np.sum(w**2)
        assert rep["effective_samples"] == pytest.approx(ess, rel=1e-12)

    def test_all_weights_dead_raises(self):
        with pytest.raises(ValueError, match="cutoff size"):
            measures.invariance_battery(
                "deep", 3, 2.0, count=8, t_final=0.1, samples=4, seed=9,
                big_k=1e-6,
            )

    def test_index_validation(self):
        with pytest.raises(ValueError):
            measures.invariance_battery(
                "deep", 1, 2.0, count=8, t_final=0.1, samples=4, seed=9, big_k=1.0
            )


class TestSubstreams:
    def test_reproducible_and_disjoint(self):
        a = rng.standard_complex(rng.substream(1, 0), 4)
        b = rng.standard_complex(rng.substream(1, 0), 4)
        c = rng.standard_complex(rng.substream(1, 1), 4)
        d = rng.standard_complex(rng.substream(2, 0), 4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            rng.substream(1, -1)

    def test_unit_variance_parts(self):
        z = rng.standard_complex(rng.substream(3, 0), 20000)
        assert z.real.var() == pytest.approx(1.0, abs=0.05)
        assert z.imag.var() == pytest.approx(1.0, abs=0.05)
