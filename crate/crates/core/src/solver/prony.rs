use crate::kernel::MemoryKernel;

/// Exact exponential-mode history `psi_j = int g_j(s) eta(s) ds` per patch node, advanced with
/// the velocity held constant over each step.
#[derive(Debug, Clone)]
pub struct PronyAux {
    /// `(amplitude, relaxation)` per term.
    terms: Vec<(f64, f64)>,
    /// `psi[j * n + p]`.
    psi: Vec<f64>,
    n: usize,
}

impl PronyAux {
    pub fn new(kernel: &MemoryKernel, n: usize) -> Self {
        let terms: Vec<_> = kernel
            .terms()
            .iter()
            .map(|t| (t.amplitude, t.relaxation))
            .collect();
        Self {
            psi: vec![0.0; terms.len() * n],
            terms,
            n,
        }
    }

    /// Starts from given mode values, `psi[j * n + p]`.
    pub fn with_values(kernel: &MemoryKernel, n: usize, psi: Vec<f64>) -> Self {
        let mut s = Self::new(kernel, n);
        assert_eq!(psi.len(), s.psi.len());
        s.psi = psi;
        s
    }

    /// `d psi_j / dt = a_j tau_j v - psi_j / tau_j`, integrated exactly for constant `v`.
    pub fn advance(&mut self, v: &[f64], dt: f64) {
        for (j, &(a, tau)) in self.terms.iter().enumerate() {
            let e = (-dt / tau).exp();
            let gain = a * tau * tau * (1.0 - e);
            for (psi, &vp) in self.psi[j * self.n..(j + 1) * self.n].iter_mut().zip(v) {
                *psi = e * *psi + gain * vp;
            }
        }
    }

    /// Sum over modes per node.
    pub fn total(&self) -> Vec<f64> {
        (0..self.n)
            .map(|p| (0..self.terms.len()).map(|j| self.psi[j * self.n + p]).sum())
            .collect()
    }

    /// `max |psi - h| / max |psi|`, zero when both vanish.
    pub fn discrepancy(&self, h: &[f64]) -> f64 {
        let tot = self.total();
        let scale = tot.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = tot
            .iter()
            .zip(h)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if scale == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / scale
        }
    }
}
