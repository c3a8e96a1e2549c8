import io

import numpy as np
import pytest

from safespread import (
    Ball,
    ConstantCovariate,
    CycleCovariate,
    EpidemicConfig,
    InconsistentTraceError,
    KernelSpec,
    NoiseDriver,
    ParticleMeasure,
    PointCloud,
    UniformCdf,
    extract_radii,
    radii_from_diameters,
    read_trace_csv,
    run_epidemic,
    sample_initial_measure,
    step_measure,
    trace_to_csv,
    trace_to_json,
)
from safespread.geometry import diameter, dilate


def _config(dimension=1, particles=300, radius_map="identity", covariate=None,
            noise_law=None, start=None):
    return EpidemicConfig(
        initial_support=start if start is not None else Ball(np.zeros(dimension), 1.0),
        kernel=KernelSpec(radius_map=radius_map, profile="uniform_ball",
                          dimension=dimension),
        noise=NoiseDriver(noise_law if noise_law is not None else UniformCdf(0.5, 1.5)),
        covariate=covariate if covariate is not None else ConstantCovariate(1.0),
        particles=particles,
    )


def test_particle_measure_validation():
    pm = ParticleMeasure.uniform(np.zeros((10, 2)))
    assert pm.count == 10 and pm.dimension == 2
    assert isinstance(pm.as_cloud(), PointCloud)
    with pytest.raises(ValueError):
        ParticleMeasure(np.zeros((3, 1)), np.array([0.5, 0.2, 0.2]), 0)


def test_sample_initial_measure_uniform_in_ball():
    rng = np.random.default_rng(2)
    pm = sample_initial_measure(Ball(np.array([1.0, 1.0]), 2.0), 6000, rng)
    dist = np.linalg.norm(pm.sites - np.array([1.0, 1.0]), axis=1)
    assert np.all(dist <= 2.0)
    u = np.sort((dist / 2.0) ** 2)
    ks = np.max(np.abs(u - np.arange(1, 6001) / 6000)) + 1 / 6000
    assert ks < 2.0 / np.sqrt(6000)


def test_sample_initial_measure_point_cloud_atoms():
    rng = np.random.default_rng(3)
    cloud = PointCloud(np.array([[0.0], [5.0]]))
    pm = sample_initial_measure(cloud, 2000, rng)
    frac = np.mean(pm.sites[:, 0] > 2.5)
    assert 0.4 < frac < 0.6


def test_step_measure_moves_within_radius():
    rng = np.random.default_rng(4)
    pm = ParticleMeasure.uniform(np.zeros((500, 2)))
    from safespread import realize_kernel

    kernel = realize_kernel(
        KernelSpec(radius_map="identity", profile="uniform_ball", dimension=2), 0.5, 1.0
    )
    nxt = step_measure(pm, kernel, rng)
    assert nxt.generation == 1
    assert nxt.count == 500
    # every new site is within the kernel radius of SOME old site; with all
    # old sites at the origin that means norm < radius
    assert np.all(np.linalg.norm(nxt.sites, axis=1) < 0.5)


def test_run_epidemic_diameter_identity():
    trace = run_epidemic(_config(dimension=2), 30, seed=9)
    diffs = np.diff(trace.diameters_analytic)
    np.testing.assert_allclose(diffs, 2.0 * trace.true_radii, rtol=1e-12)
    np.testing.assert_allclose(trace.recovered_radii, trace.true_radii, rtol=1e-12)
    assert trace.horizon == 30
    assert len(trace.particle_clouds) == 31
    assert len(trace.analytic_supports) == 31


def test_run_epidemic_supports_match_dilations():
    trace = run_epidemic(_config(dimension=1), 5, seed=13)
    s = trace.analytic_supports[0]
    for i, r in enumerate(trace.true_radii, start=1):
        s = dilate(s, r)
        assert diameter(s) == pytest.approx(diameter(trace.analytic_supports[i]))


def test_run_epidemic_seed_reproducible():
    t1 = run_epidemic(_config(), 12, seed=77)
    t2 = run_epidemic(_config(), 12, seed=77)
    np.testing.assert_array_equal(t1.true_radii, t2.true_radii)
    np.testing.assert_array_equal(t1.particle_clouds[-1], t2.particle_clouds[-1])
    t3 = run_epidemic(_config(), 12, seed=78)
    assert not np.array_equal(t1.true_radii, t3.true_radii)


def test_run_epidemic_int_seed_equals_seed_sequence():
    t1 = run_epidemic(_config(), 6, seed=123)
    t2 = run_epidemic(_config(), 6, seed=np.random.SeedSequence(123))
    np.testing.assert_array_equal(t1.true_radii, t2.true_radii)


def test_run_epidemic_covariate_recorded():
    trace = run_epidemic(_config(radius_map="scaled",
                                 covariate=CycleCovariate((1.0, 2.0))), 6, seed=1)
    np.testing.assert_allclose(trace.covariate_values, [1, 2, 1, 2, 1, 2])
    np.testing.assert_allclose(
        trace.true_radii, trace.noise_values * trace.covariate_values, rtol=1e-12
    )


def test_radii_from_diameters():
    diams = np.array([0.0, 1.0, 1.6, 3.0])
    np.testing.assert_allclose(radii_from_diameters(diams), [0.5, 0.3, 0.7])
    with pytest.raises(InconsistentTraceError):
        radii_from_diameters(np.array([0.0, 2.0, 1.0]))
    # non-strict mode clamps a small decrease to zero
    out = radii_from_diameters(np.array([0.0, 2.0, 1.0]), strict=False)
    np.testing.assert_allclose(out, [1.0, 0.0])


def test_extract_radii_views():
    trace = run_epidemic(_config(particles=400), 8, seed=5)
    np.testing.assert_array_equal(extract_radii(trace, "true"), trace.true_radii)
    np.testing.assert_allclose(
        extract_radii(trace, "analytic"), trace.true_radii, rtol=1e-12
    )
    particle = extract_radii(trace, "particle")
    assert particle.shape == (8,)
    assert np.all(particle >= 0.0)
    with pytest.raises(ValueError):
        extract_radii(trace, "imaginary")


def test_trace_csv_roundtrip():
    trace = run_epidemic(_config(), 10, seed=21)
    text = trace_to_csv(trace)
    lines = text.splitlines()
    assert lines[0] == "step,diameter_analytic,diameter_particle,radius_true,radius_recovered"
    assert len(lines) == 12
    assert lines[1].startswith("0,")
    cols = read_trace_csv(io.StringIO(text))
    np.testing.assert_allclose(cols["diameter_analytic"], trace.diameters_analytic)
    np.testing.assert_allclose(cols["radius_true"][1:], trace.true_radii)
    assert np.isnan(cols["radius_true"][0])
    assert cols["step"].tolist() == list(range(11))


def test_trace_csv_exact_float_roundtrip():
    trace = run_epidemic(_config(), 5, seed=33)
    cols = read_trace_csv(io.StringIO(trace_to_csv(trace)))
    # repr-based serialization restores the exact doubles
    assert cols["diameter_analytic"].tolist() == list(trace.diameters_analytic)


def test_read_trace_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        read_trace_csv(io.StringIO("a,b\n1,2\n"))


def test_trace_to_json_shapes():
    trace = run_epidemic(_config(particles=50), 4, seed=2)
    doc = trace_to_json(trace)
    assert doc["kind"] == "epidemic_trace"
    assert doc["horizon"] == 4
    assert len(doc["radii"]["true"]) == 4
    assert "particle_clouds" not in doc
    rich = trace_to_json(trace, include_points=True)
    assert len(rich["particle_clouds"]) == 5
    assert len(rich["particle_clouds"][0]) == 50


def test_epidemic_config_validation():
    with pytest.raises(ValueError):
        _config(dimension=2, start=Ball(np.zeros(3), 1.0))
    with pytest.raises(ValueError):
        EpidemicConfig(
            initial_support=dilate(PointCloud(np.array([[0.0], [1.0]])), 0.5),
            kernel=KernelSpec(radius_map="identity", profile="uniform_ball", dimension=1),
            noise=NoiseDriver(UniformCdf(0, 1)),
            covariate=ConstantCovariate(1.0),
        )
    with pytest.raises(ValueError):
        run_epidemic(_config(), 0, seed=1)
