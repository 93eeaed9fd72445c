"""Simulated counting experiment: preparation, noise, sampling, tomography.

Statistical checks run on fixed seeds, so every assertion is
deterministic; tolerances are sized from the exact multinomial error
scales rather than tuned to the draws.
"""

import math

import numpy as np
import pytest

from gme.estimators import provider_expectation
from gme.lab import (
    COUNTS_FIELDS,
    CountsRecord,
    NoiseModel,
    PREPARATIONS,
    RunConfig,
    WavePlateSettings,
    add_depolarizing,
    counts_provider,
    depolarized_fidelity,
    depolarized_purity,
    estimate_expectation,
    eta_for_purity,
    exact_counts_record,
    flip_first_qubit,
    mixed_state,
    noisy_prepared_state,
    outcome_probabilities,
    prepared_pure_state,
    preparation,
    project_to_density,
    read_counts_csv,
    realized_pure_state,
    sample_counts,
    setting_basis,
    setting_index,
    simulate_records,
    tomography,
    write_counts_csv,
)
from gme.measures import concurrence_fill, gmc
from gme.qstate import (
    ALL_SETTINGS,
    DensityMatrix,
    HermitianOperator,
    PureState,
    bisep,
    expectation,
    fidelity,
    ghz,
    named_state,
    pauli_matrix,
    purity,
    required_settings,
    w_state,
)


def _projector(psi):
    return HermitianOperator(np.outer(psi.amplitudes, psi.amplitudes.conj()))


# --- preparation stage ------------------------------------------------------


def test_bisep_row_is_exact():
    psi = realized_pure_state("bisep")
    assert fidelity(bisep(), np.outer(psi.amplitudes, psi.amplitudes.conj())) == pytest.approx(
        1.0, abs=1e-12
    )


def test_theta3_none_matches_zero_degrees():
    with_none = prepared_pure_state(WavePlateSettings(22.5, 45.0, None))
    with_zero = prepared_pure_state(WavePlateSettings(22.5, 45.0, 0.0))
    np.testing.assert_allclose(with_none.amplitudes, with_zero.amplitudes, atol=1e-15)


def test_psi2_row_amplitudes():
    # the plates emit the bit-flipped partner sin(pi/8)|000> + cos(pi/8)|111>
    psi = prepared_pure_state(preparation("psi2").settings)
    expected = np.zeros(8)
    expected[0] = math.sin(math.pi / 8)
    expected[7] = math.cos(math.pi / 8)
    np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-12)


def test_w_row_fidelity_after_flip():
    psi = realized_pure_state("w")
    f = fidelity(w_state(), np.outer(psi.amplitudes, psi.amplitudes.conj()))
    assert f >= 0.999
    assert f >= 0.99999  # the logged angles land much closer than the contract asks


@pytest.mark.parametrize(
    "name",
    [
        pytest.param(
            "psi1",
            marks=pytest.mark.xfail(
                strict=True,
                reason="the logged psi1 angles prepare a different state "
                "(target overlap exactly 1/4); tracked in the README data "
                "notes and asserted at face value by the acceptance suite",
            ),
        ),
        "psi2",
        "psi3",
    ],
)
def test_measure_equivalence_of_superposition_rows(name):
    # preparations may differ from their targets by local unitaries, so
    # the comparison is at the measure level, never amplitude level
    prep = realized_pure_state(name)
    target = named_state(name)
    assert concurrence_fill(prep) == pytest.approx(concurrence_fill(target), abs=1e-6)
    assert gmc(prep) == pytest.approx(gmc(target), abs=1e-6)


def test_psi1_row_overlap_is_one_quarter():
    # the logged psi1 angles produce a different member of its family:
    # the overlap with the named target is exactly 1/4
    psi = realized_pure_state("psi1")
    f = fidelity(named_state("psi1"), np.outer(psi.amplitudes, psi.amplitudes.conj()))
    assert f == pytest.approx(0.25, abs=1e-12)


def test_w_row_measure_gaps():
    # fill survives the 0.01-degree angle rounding, gmc lands just past 1e-3
    prep = realized_pure_state("w")
    target = w_state()
    assert abs(concurrence_fill(prep) - concurrence_fill(target)) < 1e-4
    assert 1e-3 < abs(gmc(prep) - gmc(target)) < 2e-3


def test_flip_first_qubit_permutation():
    e0 = PureState(np.eye(8)[0])
    assert flip_first_qubit(e0).amplitudes[4] == 1.0
    rng = np.random.default_rng(3)
    amp = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi = PureState(amp / np.linalg.norm(amp))
    np.testing.assert_array_equal(
        flip_first_qubit(flip_first_qubit(psi)).amplitudes, psi.amplitudes
    )
    # a single-qubit flip is a local unitary: GHZ moves to (|100>+|011>)/sqrt(2)
    # but every measure is untouched
    flipped = flip_first_qubit(ghz())
    np.testing.assert_array_equal(flipped.amplitudes, ghz().amplitudes[np.arange(8) ^ 4])
    assert concurrence_fill(flipped) == pytest.approx(1.0, abs=1e-12)
    assert gmc(flipped) == pytest.approx(1.0, abs=1e-12)


def test_wave_plate_settings_validation():
    with pytest.raises(ValueError, match="finite"):
        WavePlateSettings(float("nan"), 0.0, 0.0)
    with pytest.raises(ValueError, match="unknown preparation"):
        preparation("ghz")


# --- benchmark family and noise ---------------------------------------------


def test_mixed_state_endpoints_and_range():
    b = bisep().amplitudes
    np.testing.assert_allclose(mixed_state(0.0).entries, np.outer(b, b.conj()), atol=1e-15)
    w = w_state().amplitudes
    np.testing.assert_allclose(mixed_state(1.0).entries, np.outer(w, w.conj()), atol=1e-15)
    assert purity(mixed_state(0.5)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError, match="mixing weight"):
        mixed_state(1.2)
    with pytest.raises(ValueError, match="mixing weight"):
        mixed_state(-0.1)


def test_depolarizing_purity_and_fidelity_formulas():
    rng = np.random.default_rng(14)
    amp = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi = PureState(amp / np.linalg.norm(amp))
    eta = 0.3
    rho = add_depolarizing(psi, eta)
    assert purity(rho) == pytest.approx(depolarized_purity(1.0, eta), abs=1e-12)
    assert fidelity(psi, rho) == pytest.approx(depolarized_fidelity(1.0, eta), abs=1e-12)
    assert purity(add_depolarizing(psi, 0.0)) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(add_depolarizing(psi, 1.0).entries, np.eye(8) / 8, atol=1e-15)
    assert NoiseModel(eta).apply(psi).entries == pytest.approx(rho.entries)
    with pytest.raises(ValueError, match="noise strength"):
        add_depolarizing(psi, 1.5)
    with pytest.raises(ValueError, match="noise strength"):
        NoiseModel(-0.2)


def test_eta_for_purity_roundtrip_and_errors():
    assert eta_for_purity(depolarized_purity(1.0, 0.37)) == pytest.approx(0.37, abs=1e-12)
    assert eta_for_purity(1.0) == 0.0
    assert eta_for_purity(1.0 / 8.0) == pytest.approx(1.0, abs=1e-12)
    start = depolarized_purity(1.0, 0.2)
    target = depolarized_purity(1.0, 0.2 + 0.5 * 0.8)  # two channels compose
    assert eta_for_purity(target, start) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError, match="target purity"):
        eta_for_purity(0.1)
    with pytest.raises(ValueError, match="target purity"):
        eta_for_purity(0.9, initial_purity=0.8)
    with pytest.raises(ValueError, match="initial purity"):
        eta_for_purity(1.0 / 8.0, initial_purity=1.0 / 8.0)


def test_noisy_preparations_match_logged_purity():
    for name, row in PREPARATIONS.items():
        rho = noisy_prepared_state(name)
        assert purity(rho) == pytest.approx(row.purity, abs=1e-12), name
        # the one-parameter noise model pins purity; its implied overlap
        # is reported, not forced to the logged fidelity
        eta = eta_for_purity(row.purity)
        psi = realized_pure_state(name)
        assert fidelity(psi, rho) == pytest.approx(depolarized_fidelity(1.0, eta), abs=1e-12)


# --- projective counting ----------------------------------------------------


def test_setting_bases_are_orthonormal():
    for s in ALL_SETTINGS:
        v = setting_basis(s)
        np.testing.assert_allclose(v.conj().T @ v, np.eye(8), atol=1e-12)


def test_outcome_probability_conventions():
    p = outcome_probabilities(PureState(np.eye(8)[0]), "zzz")
    np.testing.assert_allclose(p, np.eye(8)[0], atol=1e-15)
    p = outcome_probabilities(ghz(), "zzz")
    np.testing.assert_allclose(p, [0.5, 0, 0, 0, 0, 0, 0, 0.5], atol=1e-12)
    # GHZ under xxx: only even-parity outcomes, each 1/4
    p = outcome_probabilities(ghz(), "xxx")
    expected = np.zeros(8)
    expected[[0, 3, 5, 6]] = 0.25
    np.testing.assert_allclose(p, expected, atol=1e-12)
    with pytest.raises(ValueError, match="not a measurement setting"):
        outcome_probabilities(ghz(), "xx")


def test_exact_record_reproduces_operator_expectations():
    # sign conventions: sign-weighted exact frequencies must equal
    # Tr(sigma_s rho) for every string a setting covers
    rho = noisy_prepared_state("psi3")
    rec = exact_counts_record(rho, "xyz")
    for s in ["x00", "0y0", "00z", "xy0", "x0z", "0yz", "xyz", "000"]:
        assert rec.expectation(s) == pytest.approx(
            expectation(pauli_matrix(s), rho), abs=1e-12
        ), s


def test_counts_record_expectations_and_validation():
    rec = CountsRecord("zzz", 1000, np.array([600, 0, 0, 0, 400, 0, 0, 0]))
    assert rec.expectation("z00") == pytest.approx(0.2)
    assert rec.expectation("0z0") == pytest.approx(1.0)
    assert rec.expectation("zz0") == pytest.approx(0.2)
    assert rec.expectation("000") == pytest.approx(1.0)
    with pytest.raises(ValueError, match="does not cover"):
        rec.expectation("x00")
    with pytest.raises(ValueError, match="counts sum"):
        CountsRecord("zzz", 999, np.array([600, 0, 0, 0, 400, 0, 0, 0]))
    with pytest.raises(ValueError, match="nonnegative"):
        CountsRecord("zzz", 1000, np.array([1001, 0, 0, 0, -1, 0, 0, 0]))
    with pytest.raises(ValueError, match="shots"):
        CountsRecord("zzz", 0, np.zeros(8))
    with pytest.raises(ValueError, match="not a measurement setting"):
        CountsRecord("zzq", 10, np.array([10, 0, 0, 0, 0, 0, 0, 0]))


def test_sample_counts_concentrated_and_stabilizer():
    rec = sample_counts(PureState(np.eye(8)[0]), "zzz", 1000, seed=5)
    assert rec.counts[0] == 1000 and rec.counts.sum() == 1000
    # xxx stabilizes GHZ: every sampled outcome has even parity
    rec = sample_counts(ghz(), "xxx", 4096, seed=9)
    assert rec.expectation("xxx") == 1.0


def test_sample_counts_statistics_on_w():
    # <z00> on W is 1/3 exactly; check a seeded draw at 4 sigma
    shots = 40_000
    rec = sample_counts(w_state(), "zzz", shots, seed=17)
    m = rec.expectation("z00")
    sigma = math.sqrt((1 - (1 / 3) ** 2) / shots)
    assert abs(m - 1 / 3) < 4 * sigma


def test_sample_counts_uniform_chi_square():
    # 1/8 per outcome; chi-square with 7 dof stays under the 99.9% quantile
    shots = 100_000
    rec = sample_counts(DensityMatrix(np.eye(8) / 8), "xyz", shots, seed=23)
    expected = shots / 8.0
    chi2 = float(((rec.counts - expected) ** 2 / expected).sum())
    assert chi2 < 24.32


def test_simulate_records_determinism_and_subset_stability():
    rho = mixed_state(0.5)
    a = simulate_records(rho, shots=500, master_seed=9)
    b = simulate_records(rho, shots=500, master_seed=9)
    assert len(a) == 27
    for r1, r2 in zip(a, b):
        assert r1.setting == r2.setting and r1.seed == r2.seed
        np.testing.assert_array_equal(r1.counts, r2.counts)
    # per-setting seeds depend only on the master seed and the setting
    (only_zzz,) = simulate_records(rho, ["zzz"], shots=500, master_seed=9)
    full_zzz = next(r for r in a if r.setting == "zzz")
    assert only_zzz.seed == full_zzz.seed
    np.testing.assert_array_equal(only_zzz.counts, full_zzz.counts)
    assert setting_index("xxx") == 0 and setting_index("zzz") == 26


# --- expectation estimation -------------------------------------------------


def test_estimate_identity_operator():
    value, stderr = estimate_expectation(HermitianOperator(np.eye(8)), [])
    assert value == 1.0 and stderr == 0.0


def test_estimate_stabilizer_is_exact_with_zero_stderr():
    # all Bisep mass sits on outcomes where z z 0 reads +1, so the
    # estimate is exactly 1 and the plug-in variance vanishes
    rec = sample_counts(bisep(), "zzz", 2000, seed=3)
    A = HermitianOperator(pauli_matrix("zz0"))
    value, stderr = estimate_expectation(A, [rec])
    assert value == pytest.approx(1.0, abs=1e-15)
    assert stderr == pytest.approx(0.0, abs=1e-15)


def test_estimate_w_projector_on_mixture():
    A = _projector(w_state())
    settings = sorted(required_settings(A))
    records = simulate_records(mixed_state(0.3), settings, shots=20_000, master_seed=11)
    value, stderr = estimate_expectation(A, records)
    assert 0.0 < stderr < 0.01
    assert abs(value - 0.3) < 5 * stderr


def test_estimate_missing_setting_raises():
    A = HermitianOperator(pauli_matrix("xxx"))
    rec = sample_counts(ghz(), "zzz", 100, seed=0)
    with pytest.raises(ValueError, match="no record covers xxx"):
        estimate_expectation(A, [rec])


def test_estimate_unbiased_over_seeds():
    # mean over 100 independent runs stays within 4 standard errors
    A = _projector(w_state())
    settings = sorted(required_settings(A))
    rho = mixed_state(0.5)
    values = []
    for master in range(100):
        records = simulate_records(rho, settings, shots=10_000, master_seed=master)
        values.append(estimate_expectation(A, records)[0])
    values = np.asarray(values)
    sem = values.std(ddof=1) / math.sqrt(len(values))
    assert abs(values.mean() - 0.5) < 4 * sem


def test_estimate_agrees_with_counts_provider():
    # provider_expectation and estimate_expectation share the same
    # per-string averaging, so the central values must coincide
    A = _projector(named_state("ghz"))
    records = simulate_records(mixed_state(0.25), shots=2_000, master_seed=6)
    value, _ = estimate_expectation(A, records)
    assert provider_expectation(A, counts_provider(records)) == pytest.approx(value, abs=1e-12)
    provider = counts_provider(records[:1])
    with pytest.raises(ValueError, match="no record covers"):
        provider("yyy" if records[0].setting != "yyy" else "xxx")
    assert counts_provider([])("000") == 1.0


# --- tomography --------------------------------------------------------------


def test_project_to_density_clips_negative_mass():
    base = np.diag([0.6, 0.5, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
    rho = project_to_density(base)
    # smallest negative eigenvalue is zeroed, its mass docked from the rest
    np.testing.assert_allclose(
        np.sort(rho.eigenvalues)[-2:], [0.45, 0.55], atol=1e-12
    )
    psd = mixed_state(0.3)
    np.testing.assert_allclose(project_to_density(psd.entries).entries, psd.entries, atol=1e-12)
    with pytest.raises(ValueError, match="nonpositive trace"):
        project_to_density(-np.eye(8))


def test_tomography_of_exact_probabilities_is_exact():
    rho = mixed_state(0.5)
    records = [exact_counts_record(rho, s, 10**6) for s in ALL_SETTINGS]
    result = tomography(records, mc_iterations=0)
    assert np.abs(result.rho.entries - rho.entries).max() < 1e-9
    assert result.iterations == 0 and result.mc_std.max() == 0.0


def test_tomography_maximally_mixed_purity_stays_low():
    records = simulate_records(DensityMatrix(np.eye(8) / 8), shots=100_000, master_seed=7)
    result = tomography(records, mc_iterations=0)
    assert purity(result.rho) <= 0.13


def test_tomography_tracks_noisy_psi3():
    rho = add_depolarizing(named_state("psi3"), eta_for_purity(0.9746))
    records = simulate_records(rho, shots=100_000, master_seed=2026)
    result = tomography(records, mc_iterations=0)
    f_true = fidelity(named_state("psi3"), rho)
    f_hat = fidelity(named_state("psi3"), result.rho)
    assert abs(f_hat - f_true) < 0.01
    assert np.abs(result.rho.entries - rho.entries).max() < 0.01


def test_tomography_mc_spread_and_determinism():
    records = simulate_records(mixed_state(0.5), shots=2_000, master_seed=4)
    r1 = tomography(records, mc_iterations=25, seed=2)
    r2 = tomography(records, mc_iterations=25, seed=2)
    np.testing.assert_array_equal(r1.rho.entries, r2.rho.entries)
    np.testing.assert_array_equal(r1.mc_std, r2.mc_std)
    assert r1.iterations == 25
    # the bootstrap spread scales like the multinomial shot noise
    assert 1e-4 < r1.mc_std.max() < 0.05
    r3 = tomography(records, mc_iterations=25, seed=3)
    assert not np.array_equal(r1.mc_std, r3.mc_std)


def test_tomography_missing_settings_raise():
    records = simulate_records(mixed_state(0.5), shots=200, master_seed=1)
    with pytest.raises(ValueError, match="missing zzz"):
        tomography([r for r in records if r.setting != "zzz"])
    with pytest.raises(ValueError, match="mc_iterations"):
        tomography(records, mc_iterations=-1)


# --- persistence --------------------------------------------------------------


def test_counts_csv_roundtrip_and_header(tmp_path):
    records = simulate_records(mixed_state(0.25), ["xxz", "zzz"], shots=300, master_seed=5)
    records.append(exact_counts_record(mixed_state(0.25), "yyy", 300))
    path = tmp_path / "counts.csv"
    write_counts_csv(records, path)
    first = path.read_text().splitlines()[0]
    assert first == "setting,shots,c0,c1,c2,c3,c4,c5,c6,c7,seed"
    back = read_counts_csv(path)
    assert [r.setting for r in back] == [r.setting for r in records]
    for r1, r2 in zip(back, records):
        assert r1.shots == r2.shots and r1.seed == r2.seed
        np.testing.assert_allclose(r1.counts, r2.counts, atol=1e-12)
    # byte-identical on rewrite
    second = tmp_path / "counts2.csv"
    write_counts_csv(back, second)
    assert path.read_bytes() == second.read_bytes()


def test_counts_csv_rejects_malformed_input(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("setting,shots\n")
    with pytest.raises(ValueError, match="unexpected counts header"):
        read_counts_csv(path)
    path.write_text(
        "setting,shots,c0,c1,c2,c3,c4,c5,c6,c7,seed\nzzz,10,10,0,0,0,0,0,0\n"
    )
    with pytest.raises(ValueError, match="malformed counts row"):
        read_counts_csv(path)


def test_run_config_json_roundtrip_and_validation():
    cfg = RunConfig(master_seed=7, shots_per_setting=5000, mc_iterations=50)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert RunConfig() == RunConfig(0, 10_000, 200)
    with pytest.raises(ValueError, match="unknown run-config keys"):
        RunConfig.from_json('{"master_seed": 1, "shots": 2}')
    with pytest.raises(ValueError, match="must be an integer"):
        RunConfig(master_seed=1.5)
    with pytest.raises(ValueError, match="positive"):
        RunConfig(shots_per_setting=0)
    with pytest.raises(ValueError, match="nonnegative"):
        RunConfig(mc_iterations=-1)
    with pytest.raises(ValueError, match="JSON object"):
        RunConfig.from_json("[1, 2, 3]")
