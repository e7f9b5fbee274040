//! Zero-padded FFT convolution of occupancy masks with a kernel table.

use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::kernel::RieszKernelTable;
use crate::error::Result;
use crate::geometry::{GridDomain, GridSpec};

/// Kernel spectrum and FFT plans for one `(grid, α)` pair.
pub struct RieszOperator {
    spec: GridSpec,
    alpha: f64,
    table: RieszKernelTable,
    padded: usize,
    kernel_hat: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RieszOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RieszOperator")
            .field("spec", &self.spec)
            .field("alpha", &self.alpha)
            .field("padded", &self.padded)
            .finish()
    }
}

/// In-place N-D transform, axis by axis.
fn transform(data: &mut [Complex<f64>], p: usize, dim: usize, plan: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex::new(0.0, 0.0); p];
    for axis in 1..dim {
        let stride = p.pow(axis as u32);
        let block = stride * p;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for k in 0..p {
                    line[k] = data[base + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for k in 0..p {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

impl RieszOperator {
    pub fn new(spec: &GridSpec, alpha: f64) -> Result<Self> {
        let table = RieszKernelTable::load_or_build(spec, alpha)?;
        Ok(Self::from_table(spec, table))
    }

    pub fn from_table(spec: &GridSpec, table: RieszKernelTable) -> Self {
        let dim = spec.dim();
        let n = spec.cells_per_axis();
        let p = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(p);
        let inverse = planner.plan_fft_inverse(p);
        let total = p.pow(dim as u32);
        let mut kern = vec![Complex::new(0.0, 0.0); total];
        let span = n as i64 - 1;
        let count = (2 * n - 1).pow(dim as u32);
        for k in 0..count {
            let mut o = [0i64; 3];
            let mut r = k;
            let mut idx = 0usize;
            let mut mult = 1usize;
            for slot in o.iter_mut().take(dim) {
                *slot = (r % (2 * n - 1)) as i64 - span;
                r /= 2 * n - 1;
                idx += (slot.rem_euclid(p as i64) as usize) * mult;
                mult *= p;
            }
            kern[idx] = Complex::new(table.weight(&o), 0.0);
        }
        transform(&mut kern, p, dim, &forward);
        Self {
            spec: spec.clone(),
            alpha: table.alpha,
            table,
            padded: p,
            kernel_hat: kern,
            forward,
            inverse,
        }
    }

    pub fn table(&self) -> &RieszKernelTable {
        &self.table
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// `v_i = h^α Σ_j K(i − j) m_j` on every cell of the box.
    pub fn convolve(&self, mask: &[bool]) -> Vec<f64> {
        let dim = self.spec.dim();
        let n = self.spec.cells_per_axis();
        let p = self.padded;
        let total = p.pow(dim as u32);
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let pad_index = |i: usize| -> usize {
            let c = self.spec.coords(i);
            let mut idx = 0;
            for a in (0..dim).rev() {
                idx = idx * p + c[a];
            }
            idx
        };
        for (i, &m) in mask.iter().enumerate() {
            if m {
                buf[pad_index(i)] = Complex::new(1.0, 0.0);
            }
        }
        transform(&mut buf, p, dim, &self.forward);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        transform(&mut buf, p, dim, &self.inverse);
        let scale = self.spec.spacing().powf(self.alpha) / total as f64;
        (0..n.pow(dim as u32))
            .map(|i| buf[pad_index(i)].re * scale)
            .collect()
    }
}

const CACHE_CAPACITY: usize = 6;

type CacheKey = (usize, usize, u64, [u64; 3], u64);

fn cache() -> &'static Mutex<Vec<(CacheKey, Arc<RieszOperator>)>> {
    static CACHE: OnceLock<Mutex<Vec<(CacheKey, Arc<RieszOperator>)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Shared operator for `(spec, α)`, built once per process.
pub fn operator_for(spec: &GridSpec, alpha: f64) -> Result<Arc<RieszOperator>> {
    let o = spec.origin();
    let key: CacheKey = (
        spec.dim(),
        spec.cells_per_axis(),
        spec.spacing().to_bits(),
        [o[0].to_bits(), o[1].to_bits(), o[2].to_bits()],
        alpha.to_bits(),
    );
    {
        let guard = cache().lock().expect("operator cache poisoned");
        if let Some((_, op)) = guard.iter().find(|(k, _)| *k == key) {
            return Ok(op.clone());
        }
    }
    let op = Arc::new(RieszOperator::new(spec, alpha)?);
    let mut guard = cache().lock().expect("operator cache poisoned");
    if guard.len() >= CACHE_CAPACITY {
        guard.remove(0);
    }
    guard.push((key, op.clone()));
    Ok(op)
}

/// Direct `O(M²)` evaluation with the same kernel table.
pub fn convolve_direct(table: &RieszKernelTable, dom: &GridDomain) -> Vec<f64> {
    let spec = dom.spec();
    let dim = spec.dim();
    let occ: Vec<[i64; 3]> = dom
        .occupied()
        .map(|j| {
            let c = spec.coords(j);
            [c[0] as i64, c[1] as i64, c[2] as i64]
        })
        .collect();
    let scale = spec.spacing().powf(table.alpha);
    (0..spec.len())
        .map(|i| {
            let c = spec.coords(i);
            let ci = [c[0] as i64, c[1] as i64, c[2] as i64];
            let mut s = 0.0;
            for cj in &occ {
                let mut o = [0i64; 3];
                for a in 0..dim {
                    o[a] = ci[a] - cj[a];
                }
                s += table.weight(&o);
            }
            s * scale
        })
        .collect()
}
