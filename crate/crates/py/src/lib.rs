//! Python bindings: `import apsk_capacity_py`.

use apsk_capacity as core;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::NonFinite(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mc(samples: usize, seed: u64) -> core::McConfig {
    core::McConfig::new(samples, seed)
}

fn block_term(exact: bool) -> core::BlockTerm {
    if exact {
        core::BlockTerm::ExactBlock
    } else {
        core::BlockTerm::Literal
    }
}

#[pyclass(name = "Constellation", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConstellation {
    inner: core::Constellation,
}

#[pymethods]
impl PyConstellation {
    #[new]
    #[pyo3(signature = (n_rings, phases_per_ring, ring_ratio, avg_energy = 1.0, ring_phase_offsets = None, allow_degenerate = false))]
    fn new(
        n_rings: usize,
        phases_per_ring: usize,
        ring_ratio: f64,
        avg_energy: f64,
        ring_phase_offsets: Option<Vec<f64>>,
        allow_degenerate: bool,
    ) -> PyResult<Self> {
        let opts = core::BuildOptions { ring_phase_offsets, allow_degenerate };
        core::build_apsk_with(n_rings, phases_per_ring, ring_ratio, avg_energy, &opts)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn n_rings(&self) -> usize {
        self.inner.n_rings()
    }

    #[getter]
    fn phases_per_ring(&self) -> usize {
        self.inner.phases_per_ring()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn ring_ratio(&self) -> f64 {
        self.inner.ring_ratio()
    }

    #[getter]
    fn avg_energy(&self) -> f64 {
        self.inner.avg_energy()
    }

    #[getter]
    fn ring_amplitudes(&self) -> Vec<f64> {
        self.inner.ring_amplitudes()
    }

    /// Points as `(re, im)` pairs, ring-major.
    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points().iter().map(|p| (p.re, p.im)).collect()
    }

    fn ring(&self, index: usize) -> PyResult<Self> {
        core::ring_subconstellation(&self.inner, index).map(|inner| Self { inner }).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __repr__(&self) -> String {
        format!("Constellation({})", self.inner.label())
    }
}

#[pyclass(name = "CapacityEstimate", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyEstimate {
    inner: core::CapacityEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn mean_bits(&self) -> f64 {
        self.inner.mean_bits
    }

    #[getter]
    fn std_error(&self) -> f64 {
        self.inner.std_error
    }

    #[getter]
    fn samples_used(&self) -> u64 {
        self.inner.samples_used
    }

    fn __repr__(&self) -> String {
        format!("CapacityEstimate(mean_bits={}, std_error={}, samples_used={})", self.inner.mean_bits, self.inner.std_error, self.inner.samples_used)
    }
}

impl From<core::CapacityEstimate> for PyEstimate {
    fn from(inner: core::CapacityEstimate) -> Self {
        Self { inner }
    }
}

#[pyclass(name = "BoundsRow", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoundsRow {
    inner: core::BoundsRow,
}

#[pymethods]
impl PyBoundsRow {
    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[getter]
    fn block_len(&self) -> usize {
        self.inner.block_len
    }

    #[getter]
    fn coherent(&self) -> PyEstimate {
        self.inner.coherent.into()
    }

    #[getter]
    fn upper_bits(&self) -> f64 {
        self.inner.upper_bits
    }

    #[getter]
    fn upper_se(&self) -> f64 {
        self.inner.upper_se
    }

    /// Clamped at zero.
    #[getter]
    fn lower_bits(&self) -> f64 {
        self.inner.lower_bits
    }

    #[getter]
    fn lower_raw_bits(&self) -> f64 {
        self.inner.lower_raw_bits
    }

    #[getter]
    fn lower_se(&self) -> f64 {
        self.inner.lower_se
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.gap()
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundsRow(snr_db={}, L={}, lower={:.4}, upper={:.4}, coherent={:.4})",
            self.inner.snr_db,
            self.inner.block_len,
            self.inner.lower_bits,
            self.inner.upper_bits,
            self.inner.coherent.mean_bits
        )
    }
}

#[pyfunction]
fn log_bessel_i0(x: f64) -> PyResult<f64> {
    core::log_bessel_i0(x).map_err(to_py)
}

#[pyfunction]
fn log_sum_exp(values: Vec<f64>) -> PyResult<f64> {
    core::log_sum_exp(&values).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (constellation, snr_db, samples = 200_000, seed = 1))]
fn coherent_capacity(py: Python<'_>, constellation: &PyConstellation, snr_db: f64, samples: usize, seed: u64) -> PyResult<PyEstimate> {
    let c = constellation.inner.clone();
    py.detach(move || {
        let ch = core::ChannelParams::from_snr_db(snr_db, c.avg_energy())?;
        core::coherent_capacity(&c, &ch, &mc(samples, seed))
    })
    .map(Into::into)
    .map_err(to_py)
}

/// `I(theta; r)` for one symbol of amplitude `amplitude`; `phases = None` is the uniform-phase model.
#[pyfunction]
#[pyo3(signature = (amplitude, snr_db, phases = None, samples = 200_000, seed = 1))]
fn phase_info(py: Python<'_>, amplitude: f64, snr_db: f64, phases: Option<usize>, samples: usize, seed: u64) -> PyResult<PyEstimate> {
    py.detach(move || {
        let ch = core::ChannelParams::new(snr_db)?;
        match phases {
            Some(p) => core::psk_phase_info_discrete(amplitude, p, &ch, &mc(samples, seed)),
            None => core::phase_info_continuous(amplitude, &ch, &mc(samples, seed)),
        }
    })
    .map(Into::into)
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (constellation, block_len, snr_db, samples = 200_000, seed = 1, exact_block_term = false))]
fn bounds_row(
    py: Python<'_>,
    constellation: &PyConstellation,
    block_len: usize,
    snr_db: f64,
    samples: usize,
    seed: u64,
    exact_block_term: bool,
) -> PyResult<PyBoundsRow> {
    let c = constellation.inner.clone();
    py.detach(move || {
        let ch = core::ChannelParams::from_snr_db(snr_db, c.avg_energy())?;
        let opts = core::BoundsOptions { block_term: block_term(exact_block_term) };
        core::bounds_row(&c, block_len, &ch, &mc(samples, seed), &opts)
    })
    .map(|inner| PyBoundsRow { inner })
    .map_err(to_py)
}

/// Rows in SNR-major order, then block length.
#[pyfunction]
#[pyo3(signature = (constellation, block_lens, snr_grid_db, samples = 200_000, seed = 1, exact_block_term = false))]
fn bounds_curve(
    py: Python<'_>,
    constellation: &PyConstellation,
    block_lens: Vec<usize>,
    snr_grid_db: Vec<f64>,
    samples: usize,
    seed: u64,
    exact_block_term: bool,
) -> PyResult<Vec<PyBoundsRow>> {
    let c = constellation.inner.clone();
    py.detach(move || {
        let opts = core::BoundsOptions { block_term: block_term(exact_block_term) };
        core::bounds_curve(&c, &block_lens, &snr_grid_db, &mc(samples, seed), &opts)
    })
    .map(|rows| rows.into_iter().map(|inner| PyBoundsRow { inner }).collect())
    .map_err(to_py)
}

/// Per-symbol block AMI, reference-conditioned unless `unknown_reference`.
#[pyfunction]
#[pyo3(signature = (constellation, block_len, snr_db, samples = 50_000, seed = 1, unknown_reference = false, budget = 65_536))]
#[allow(clippy::too_many_arguments)]
fn exact_block_ami(
    py: Python<'_>,
    constellation: &PyConstellation,
    block_len: usize,
    snr_db: f64,
    samples: usize,
    seed: u64,
    unknown_reference: bool,
    budget: u64,
) -> PyResult<PyEstimate> {
    let c = constellation.inner.clone();
    let reference = if unknown_reference { core::ReferenceSymbol::Unknown } else { core::ReferenceSymbol::Known };
    py.detach(move || {
        let ch = core::ChannelParams::from_snr_db(snr_db, c.avg_energy())?;
        core::exact_block_ami(&c, block_len, &ch, &mc(samples, seed), &core::OracleConfig { budget, reference })
    })
    .map(|ami| ami.per_symbol.into())
    .map_err(to_py)
}

/// Returns `(cells, optima)`: cells as `(snr_db, r, bits, se)`, optima as `(snr_db, argmax_r, bits, tied_lo, tied_hi)`.
#[pyfunction]
#[pyo3(signature = (n_rings, phases_per_ring, r_grid, snr_grid_db, samples = 100_000, seed = 1))]
#[allow(clippy::type_complexity)]
fn ring_ratio_sweep(
    py: Python<'_>,
    n_rings: usize,
    phases_per_ring: usize,
    r_grid: Vec<f64>,
    snr_grid_db: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<(Vec<(f64, f64, f64, f64)>, Vec<(f64, f64, f64, f64, f64)>)> {
    let spec = core::SweepSpec::new(n_rings, phases_per_ring, r_grid, snr_grid_db, mc(samples, seed));
    let table = py.detach(move || core::ring_ratio_sweep(&spec)).map_err(to_py)?;
    let cells = table.cells.iter().map(|c| (c.snr_db, c.ring_ratio, c.capacity.mean_bits, c.capacity.std_error)).collect();
    let optima = table
        .optima
        .iter()
        .map(|o| {
            let (lo, hi) = o.tie_interval();
            (o.snr_db, o.argmax_r, o.capacity.mean_bits, lo, hi)
        })
        .collect();
    Ok((cells, optima))
}

#[pymodule]
pub fn apsk_capacity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyBoundsRow>()?;
    m.add_function(wrap_pyfunction!(log_bessel_i0, m)?)?;
    m.add_function(wrap_pyfunction!(log_sum_exp, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(phase_info, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_row, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_curve, m)?)?;
    m.add_function(wrap_pyfunction!(exact_block_ami, m)?)?;
    m.add_function(wrap_pyfunction!(ring_ratio_sweep, m)?)?;
    Ok(())
}
