import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvmirror.collection import CollectionGeometry, EnhancementMap, enhancement_map, normalized_model_enhancement
from nvmirror.dipole import mirror_environment
from nvmirror.exceptions import (
    ColumnTooShort,
    GridMismatch,
    NoFringes,
    ParseError,
    ValidationError,
    ZeroReference,
    ZeroSpectrum,
)
from nvmirror.pipeline import (
    ColumnModel,
    ScanDataset,
    beat_nodes,
    enhancement_from_scan,
    estimate_d0,
    fringe_maxima,
    load_reference,
    load_scan,
    save_reference,
    save_scan,
    synthetic_reference,
    synthetic_scan,
)
from nvmirror.spectra import SpectrumRecord, normalize_spectrum, spectral_integral

LAM = 700.0
GEOM = CollectionGeometry()
ENV = mirror_environment(1000.0)
NOMINAL = np.arange(0.0, 20001.0, 10.0)


@pytest.fixture(scope="module")
def model():
    return ColumnModel(ENV, GEOM, LAM, NOMINAL, (0.0, 2000.0), 5.0)


# normalization -----------------------------------------------------------------

def test_flat_spectrum_normalization():
    lam = np.arange(540.0, 901.0)
    out = normalize_spectrum(SpectrumRecord(lam, np.full(len(lam), 7.0)))
    np.testing.assert_allclose(out.counts, 1 / 360, rtol=1e-14)


def test_two_point_by_hand():
    out = normalize_spectrum(SpectrumRecord([600.0, 700.0], [2.0, 0.0]))
    assert spectral_integral(SpectrumRecord([600.0, 700.0], [2.0, 0.0])) == 100.0
    assert out.counts[0] == pytest.approx(0.02, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1e3), min_size=3, max_size=40).filter(lambda c: sum(c) > 1e-3),
       st.floats(1e-6, 1e6))
def test_normalization_idempotent_and_scale_free(counts, scale):
    lam = np.linspace(540.0, 900.0, len(counts))
    s = SpectrumRecord(lam, counts)
    once = normalize_spectrum(s)
    assert spectral_integral(once) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(normalize_spectrum(once).counts, once.counts, rtol=1e-12, atol=1e-300)
    scaled = normalize_spectrum(SpectrumRecord(lam, np.asarray(counts) * scale))
    np.testing.assert_allclose(scaled.counts, once.counts, rtol=1e-12, atol=1e-300)


def test_zero_spectrum():
    with pytest.raises(ZeroSpectrum):
        normalize_spectrum(SpectrumRecord([1.0, 2.0], [0.0, 0.0]))
    with pytest.raises(ValidationError):
        SpectrumRecord([1.0, 2.0], [1.0, -1.0])


# measured enhancement ------------------------------------------------------------

def small_map():
    lam = np.arange(600.0, 801.0, 2.0)
    return enhancement_map(np.arange(800.0, 1600.0, 20.0), lam, GEOM, ENV)


def test_scan_equal_to_reference_gives_ones():
    lam = np.arange(540.0, 901.0, 3.0)
    ref = synthetic_reference(lam)
    scan = ScanDataset([1.0, 2.0, 3.0], lam, np.vstack([ref.counts * k for k in (1, 5, 0.2)]))
    np.testing.assert_allclose(enhancement_from_scan(scan, ref).values, 1.0, rtol=1e-12)


def test_synthetic_round_trip_cancels_pump():
    m = small_map()
    ref = synthetic_reference(m.lambda_grid)
    rng = np.random.default_rng(7)
    scan = synthetic_scan(m, ref, rng.uniform(0.2, 5.0, len(m.d_grid)))
    got = enhancement_from_scan(scan, ref)
    want = normalized_model_enhancement(m, ref)
    assert np.max(np.abs(got.values - want.values)) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=4, max_size=4))
def test_per_distance_rescaling_invariance(scales):
    lam = np.linspace(600.0, 700.0, 11)
    ref = SpectrumRecord(lam, 1 + 0.1 * np.arange(11))
    base = np.abs(np.sin(np.arange(44.0).reshape(4, 11))) + 0.5
    a = enhancement_from_scan(ScanDataset(np.arange(4.0), lam, base), ref)
    b = enhancement_from_scan(ScanDataset(np.arange(4.0), lam, base * np.array(scales)[:, None]), ref)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12)


def test_zero_row_names_distance():
    lam = np.linspace(600.0, 700.0, 5)
    counts = np.ones((3, 5))
    counts[1] = 0
    with pytest.raises(ZeroSpectrum, match="1250") as info:
        enhancement_from_scan(ScanDataset([1000.0, 1250.0, 1500.0], lam, counts), SpectrumRecord(lam, np.ones(5)))
    assert info.value.d == 1250.0


def test_reference_problems():
    lam = np.linspace(600.0, 700.0, 5)
    scan = ScanDataset([1.0], lam, np.ones((1, 5)))
    with pytest.raises(ZeroReference):
        enhancement_from_scan(scan, SpectrumRecord(lam, [1.0, 1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(GridMismatch):
        enhancement_from_scan(scan, SpectrumRecord(np.linspace(620.0, 700.0, 5), np.ones(5)))
    fine = np.linspace(590.0, 710.0, 121)
    out = enhancement_from_scan(scan, SpectrumRecord(fine, np.ones(121)))
    assert out.meta["reference_resampled"] == "linear"


# fringes ---------------------------------------------------------------------

def test_cosine_maxima():
    d = np.arange(0.0, 6000.0, 10.0)
    lam_air = 700.0
    col = 1 + 0.5 * np.cos(4 * np.pi * d / lam_air)
    m = EnhancementMap(d, [lam_air], col[:, None])
    peaks = fringe_maxima(m, lam_air)
    expected = np.arange(lam_air / 2, d[-1], lam_air / 2)
    assert len(peaks) == len(expected)
    assert np.max(np.abs(peaks - expected)) <= 10.0
    assert np.mean(np.diff(peaks)) == pytest.approx(350.0, abs=10.0)


def test_monotone_column_has_no_maxima():
    d = np.arange(0.0, 1000.0, 10.0)
    assert len(fringe_maxima(EnhancementMap(d, [LAM], (1 + d / 1000)[:, None]), LAM)) == 0


def test_short_column():
    with pytest.raises(ColumnTooShort):
        fringe_maxima(EnhancementMap(np.arange(6.0), [LAM], np.ones((6, 1))), LAM)


@pytest.fixture(scope="module")
def default_column():
    return enhancement_map(500.0 + 10.0 * np.arange(2001), [LAM], GEOM, ENV)


def test_maxima_count_over_twenty_microns(default_column):
    from scipy.signal import find_peaks

    raw = len(find_peaks(default_column.values[:, 0])[0])
    assert abs(raw - 57) <= 2
    # weak fringes near the beat nodes fall below the prominence threshold
    assert len(fringe_maxima(default_column, LAM)) == 50


def test_beat_nodes_of_default_column(default_column):
    nodes, spread = beat_nodes(default_column.d_grid, default_column.values[:, 0], LAM)
    for target in (5500.0, 11000.0, 16500.0):
        assert np.min(np.abs(nodes - target)) <= 500.0
    assert spread.shape == default_column.d_grid.shape


# d0 fit ----------------------------------------------------------------------

def test_d0_noiseless(model):
    est = estimate_d0(model(500.0), model, LAM)
    assert est.d0 == pytest.approx(500.0, abs=5.0)
    assert est.residual < 5.0
    assert est.n_measured == est.n_model


@pytest.mark.parametrize("seed", range(5))
def test_d0_with_noise(model, seed):
    rng = np.random.default_rng(seed)
    clean = model(500.0)
    noisy = EnhancementMap(clean.d_grid, clean.lambda_grid, clean.values * (1 + 0.02 * rng.standard_normal(clean.values.shape)))
    assert estimate_d0(noisy, model, LAM).d0 == pytest.approx(500.0, abs=20.0)


def test_d0_on_monotone_map(model):
    flat = EnhancementMap(NOMINAL, [LAM], (1 + NOMINAL / 1e5)[:, None])
    with pytest.raises(NoFringes):
        estimate_d0(flat, model, LAM)


def test_poor_fit_is_a_warning(model):
    from nvmirror.exceptions import PoorFitWarning

    with pytest.warns(PoorFitWarning):
        est = estimate_d0(model(500.0), model, LAM, poor_fit_threshold=-1.0)
    assert est.poor_fit


def test_column_model_lattice(model):
    with pytest.raises(ValueError):
        model(2.5)
    with pytest.raises(ValueError):
        model(5000.0)


# files -------------------------------------------------------------------------

def test_scan_and_reference_files_round_trip(tmp_path):
    lam = np.array([600.0, 650.0, 700.0])
    scan = ScanDataset([500.0, 510.0], lam, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]])
    back = load_scan(save_scan(scan, tmp_path / "s.csv", comments=["synthetic"]))
    assert back.counts.tobytes() == scan.counts.tobytes()
    ref = load_reference(save_reference(SpectrumRecord(lam, [1.0, 2.0, 1.0]), tmp_path / "r.csv"))
    np.testing.assert_array_equal(ref.counts, [1.0, 2.0, 1.0])


@pytest.mark.parametrize(
    "text, match",
    [
        ("# lambda_nm: 600,700\n500,1,2\n510,1\n", r":3: expected 3"),
        ("# lambda_nm: 600,700\n500,1,2\n510,1,zz\n", r":3: column 3"),
        ("500,1,2\n", r":1: data before"),
        ("# lambda_nm: 600,700\n510,1,2\n500,1,2\n", "strictly increasing"),
    ],
)
def test_scan_format_errors(tmp_path, text, match):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError, match=match):
        load_scan(p)


def test_reference_needs_one_row(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("# lambda_nm: 600,700\n1,2\n3,4\n")
    with pytest.raises(ParseError):
        load_reference(p)
