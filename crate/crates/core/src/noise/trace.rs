//! The multiplicative XPM noise ρ(t) = n(t)·e^{jφ(t)} seen by a coherent probe, and the
//! product rule that combines single-pump traces.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;
use crate::signal::{Fft, SampledField};

/// Fraction of each trace edge excluded from statistics.
pub const EDGE_TRIM: f64 = 0.05;
/// Samples where |a_tx| falls below this fraction of its RMS are masked.
pub const MASK_THRESHOLD: f64 = 0.1;

/// One pump that contributed to a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpTag {
    /// Pump carrier minus probe carrier, Hz.
    pub delta_f: f64,
    pub p_pump_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMetadata {
    pub d_res_il: Option<ResidualDispersion>,
    pub pumps: Vec<PumpTag>,
    pub seed: Option<u64>,
}

impl TraceMetadata {
    pub fn single(d_res_il: ResidualDispersion, delta_f: f64, p_pump_dbm: f64, seed: u64) -> Self {
        Self {
            d_res_il: Some(d_res_il),
            pumps: vec![PumpTag {
                delta_f,
                p_pump_dbm,
            }],
            seed: Some(seed),
        }
    }
}

/// A single-pump trace kept inside superposed traces so that combination can always be
/// recomputed from the same leaves in the same order.
#[derive(Debug, Clone, PartialEq)]
struct Leaf {
    metadata: TraceMetadata,
    n: Vec<f64>,
    phi: Vec<f64>,
    valid: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XpmNoiseTrace {
    pub sample_rate: f64,
    pub rho: Vec<Complex64>,
    pub n: Vec<f64>,
    /// Unwrapped phase; masked samples hold the preceding valid value.
    pub phi: Vec<f64>,
    /// Samples where the transmitted reference was strong enough for the ratio.
    pub valid: Vec<bool>,
    /// Variance of n about its mean.
    pub amp_variance: f64,
    /// Standard deviation of φ about its mean.
    pub phase_std: f64,
    pub mean_amplitude: f64,
    pub mean_phase: f64,
    pub metadata: TraceMetadata,
    leaves: Vec<Arc<Leaf>>,
}

impl XpmNoiseTrace {
    /// Builds a trace from amplitude and unwrapped phase; ρ is recomputed from them.
    pub fn from_polar(
        sample_rate: f64,
        n: Vec<f64>,
        phi: Vec<f64>,
        valid: Vec<bool>,
        metadata: TraceMetadata,
    ) -> Result<Self> {
        if n.len() != phi.len() {
            return Err(Error::LengthMismatch(n.len(), phi.len()));
        }
        if n.len() != valid.len() {
            return Err(Error::LengthMismatch(n.len(), valid.len()));
        }
        if n.is_empty() {
            return Err(Error::EmptyInput("a trace needs samples"));
        }
        let leaf = Arc::new(Leaf {
            metadata: metadata.clone(),
            n: n.clone(),
            phi: phi.clone(),
            valid: valid.clone(),
        });
        Ok(Self::assemble(
            sample_rate,
            n,
            phi,
            valid,
            metadata,
            vec![leaf],
        ))
    }

    /// The neutral element of superposition: n ≡ 1, φ ≡ 0, no pumps.
    pub fn identity(len: usize, sample_rate: f64) -> Self {
        Self::assemble(
            sample_rate,
            vec![1.0; len],
            vec![0.0; len],
            vec![true; len],
            TraceMetadata::default(),
            Vec::new(),
        )
    }

    fn assemble(
        sample_rate: f64,
        n: Vec<f64>,
        phi: Vec<f64>,
        valid: Vec<bool>,
        metadata: TraceMetadata,
        leaves: Vec<Arc<Leaf>>,
    ) -> Self {
        let rho = n
            .iter()
            .zip(&phi)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        let (mean_amplitude, amp_variance) = moments(&n, &valid);
        let (mean_phase, phase_var) = moments(&phi, &valid);
        Self {
            sample_rate,
            rho,
            n,
            phi,
            valid,
            amp_variance,
            phase_std: phase_var.sqrt(),
            mean_amplitude,
            mean_phase,
            metadata,
            leaves,
        }
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// Index range used for statistics.
    pub fn trimmed_range(&self) -> std::ops::Range<usize> {
        trimmed(self.len())
    }

    pub fn masked_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Largest |ρ − n·e^{jφ}| over the trace.
    pub fn reconstruction_error(&self) -> f64 {
        self.rho
            .iter()
            .zip(self.n.iter().zip(&self.phi))
            .map(|(r, (&a, &p))| (r - Complex64::from_polar(a, p)).norm())
            .fold(0.0, f64::max)
    }

    /// Checks the structural invariants every trace must satisfy.
    pub fn check(&self) -> Result<()> {
        let err = self.reconstruction_error();
        if !(err < 1e-12) {
            return Err(Error::Format(format!("reconstruction error {err:.3e}")));
        }
        if self.n.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::Format("negative amplitude factor".into()));
        }
        if !(0.5..=1.5).contains(&self.mean_amplitude) {
            return Err(Error::Format(format!(
                "mean amplitude factor {:.3} is not a perturbation of unity",
                self.mean_amplitude
            )));
        }
        Ok(())
    }

    /// Number of single-pump traces combined into this one.
    pub fn constituent_count(&self) -> usize {
        self.leaves.len()
    }
}

fn trimmed(len: usize) -> std::ops::Range<usize> {
    let cut = (len as f64 * EDGE_TRIM).floor() as usize;
    cut..len - cut
}

/// Mean and variance (about the mean) over valid samples of the trimmed range.
fn moments(x: &[f64], valid: &[bool]) -> (f64, f64) {
    let range = trimmed(x.len());
    let (mut count, mut sum) = (0usize, 0.0);
    for k in range.clone() {
        if valid[k] {
            count += 1;
            sum += x[k];
        }
    }
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / count as f64;
    let var = range
        .filter(|&k| valid[k])
        .map(|k| (x[k] - mean).powi(2))
        .sum::<f64>()
        / count as f64;
    (mean, var)
}

/// Sequential unwrap with a π threshold.
pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = 0.0;
    let mut prev = match wrapped.first() {
        Some(&p) => p,
        None => return out,
    };
    for &p in wrapped {
        let mut d = p - prev;
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        out.push(p + offset);
        prev = p;
    }
    out
}

/// Span of the moving average of ρ that steers unwrapping, s. Well below the ~100 ps
/// scale of XPM phase changes.
pub const PHASE_REFERENCE_WINDOW: f64 = 50e-12;

fn wrap(x: f64) -> f64 {
    x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor()
}

/// Unwrapped phase of ρ.
///
/// A sequential unwrap commits a 2π slip whenever ρ passes close to the origin between
/// two samples. Here each sample instead takes the branch nearest the phase of a moving
/// average of ρ over [`PHASE_REFERENCE_WINDOW`], which stays away from the origin.
pub fn rho_phase(rho: &[Complex64], sample_rate: f64) -> Vec<f64> {
    let n = rho.len();
    if n == 0 {
        return Vec::new();
    }
    let half = ((PHASE_REFERENCE_WINDOW * sample_rate / 2.0).round() as usize).min(n / 2);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(Complex64::new(0.0, 0.0));
    for (k, r) in rho.iter().enumerate() {
        prefix.push(prefix[k] + r);
    }
    let smooth: Vec<f64> = (0..n)
        .map(|k| (prefix[(k + half + 1).min(n)] - prefix[k.saturating_sub(half)]).arg())
        .collect();
    let reference = unwrap_phase(&smooth);
    rho.iter()
        .zip(&reference)
        .map(|(r, &c)| c + wrap(r.arg() - c))
        .collect()
}

/// ρ = a_rx / a_tx on samples where the reference is strong enough.
///
/// Masked samples hold the preceding valid ratio (the first valid one at the start),
/// so the phase is unwrapped across gaps without spurious slips.
pub fn extract_rho(
    a_rx: &SampledField,
    a_tx: &SampledField,
    metadata: TraceMetadata,
) -> Result<XpmNoiseTrace> {
    if a_rx.grid != a_tx.grid {
        return Err(Error::GridMismatch);
    }
    let total = a_tx.len();
    let threshold = MASK_THRESHOLD * a_tx.mean_power().sqrt();
    let valid: Vec<bool> = a_tx
        .samples
        .iter()
        .map(|x| x.norm() >= threshold && x.norm() > 0.0)
        .collect();
    let masked = valid.iter().filter(|v| !**v).count();
    if 2 * masked > total {
        return Err(Error::ExcessiveMasking { masked, total });
    }
    let first = valid
        .iter()
        .position(|&v| v)
        .expect("at least half the samples are valid");
    let mut hold = a_rx.samples[first] / a_tx.samples[first];
    let ratio: Vec<Complex64> = (0..total)
        .map(|k| {
            if valid[k] {
                hold = a_rx.samples[k] / a_tx.samples[k];
            }
            hold
        })
        .collect();
    let n = ratio.iter().map(|r| r.norm()).collect();
    let phi = rho_phase(&ratio, a_rx.grid.sample_rate());
    XpmNoiseTrace::from_polar(a_rx.grid.sample_rate(), n, phi, valid, metadata)
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub field: SampledField,
    /// Circular lag (samples) removed from a_rx; positive when a_rx was late.
    pub delay_samples: i64,
    pub residual_phase: f64,
}

/// Removes the integer-sample delay and constant phase between a_rx and a_tx, found
/// from the peak of their circular cross-correlation.
pub fn align_fields(a_rx: &SampledField, a_tx: &SampledField) -> Result<Alignment> {
    if a_rx.grid != a_tx.grid {
        return Err(Error::GridMismatch);
    }
    let n = a_rx.len();
    let mut fft = Fft::new(n);
    let mut x = a_rx.samples.clone();
    let mut y = a_tx.samples.clone();
    fft.forward(&mut x);
    fft.forward(&mut y);
    let mut corr: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a * b.conj()).collect();
    fft.inverse(&mut corr);
    let mag: Vec<f64> = corr.iter().map(|c| c.norm()).collect();
    let peak = (0..n)
        .max_by(|&a, &b| mag[a].partial_cmp(&mag[b]).unwrap_or(Ordering::Equal))
        .ok_or(Error::EmptyInput("alignment needs samples"))?;
    let at = |k: isize| mag[k.rem_euclid(n as isize) as usize];
    for k in 0..n {
        if k == peak {
            continue;
        }
        let ki = k as isize;
        let local_max = mag[k] > at(ki - 1) && mag[k] >= at(ki + 1);
        if local_max && mag[k] >= 0.99 * mag[peak] {
            return Err(Error::AmbiguousAlignment {
                first: peak,
                second: k,
            });
        }
    }
    let residual_phase = corr[peak].arg();
    let rotation = Complex64::from_polar(1.0, -residual_phase);
    let samples = (0..n)
        .map(|t| a_rx.samples[(t + peak) % n] * rotation)
        .collect();
    let delay = if peak > n / 2 {
        peak as i64 - n as i64
    } else {
        peak as i64
    };
    Ok(Alignment {
        field: SampledField {
            samples,
            ..a_rx.clone()
        },
        delay_samples: delay,
        residual_phase,
    })
}

fn cmp_leaf(a: &Leaf, b: &Leaf) -> Ordering {
    let tags = |l: &Leaf| -> Vec<f64> {
        let mut v: Vec<f64> = l
            .metadata
            .pumps
            .iter()
            .flat_map(|p| [p.delta_f, p.p_pump_dbm])
            .collect();
        v.push(
            l.metadata
                .d_res_il
                .map(|d| d.sort_key())
                .unwrap_or(f64::NAN),
        );
        v.push(l.metadata.seed.map(|s| s as f64).unwrap_or(f64::NAN));
        v
    };
    let by_bits = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let (ta, tb) = (tags(a), tags(b));
    ta.len()
        .cmp(&tb.len())
        .then_with(|| by_bits(&ta, &tb))
        .then_with(|| by_bits(&a.n, &b.n))
        .then_with(|| by_bits(&a.phi, &b.phi))
        .then_with(|| a.valid.cmp(&b.valid))
}

fn common<T: PartialEq + Copy>(values: impl Iterator<Item = Option<T>>) -> Option<T> {
    let mut out: Option<Option<T>> = None;
    for v in values {
        match out {
            None => out = Some(v),
            Some(prev) if prev != v => return None,
            _ => {}
        }
    }
    out.flatten()
}

/// Combines traces by n = Πnᵢ and φ = Σφᵢ.
///
/// The result is always recomputed from the flattened single-pump constituents in a
/// canonical order, so superposition is exactly commutative and associative.
pub fn superpose(traces: &[XpmNoiseTrace]) -> Result<XpmNoiseTrace> {
    let first = traces
        .first()
        .ok_or(Error::EmptyInput("superpose needs at least one trace"))?;
    for t in &traces[1..] {
        if t.len() != first.len() {
            return Err(Error::LengthMismatch(first.len(), t.len()));
        }
        if t.sample_rate != first.sample_rate {
            return Err(Error::GridMismatch);
        }
    }
    let mut leaves: Vec<Arc<Leaf>> = traces
        .iter()
        .flat_map(|t| t.leaves.iter().cloned())
        .collect();
    if leaves.is_empty() {
        return Ok(XpmNoiseTrace::identity(first.len(), first.sample_rate));
    }
    leaves.sort_by(|a, b| cmp_leaf(a, b));
    let mut n = leaves[0].n.clone();
    let mut phi = leaves[0].phi.clone();
    let mut valid = leaves[0].valid.clone();
    for leaf in &leaves[1..] {
        for k in 0..n.len() {
            n[k] *= leaf.n[k];
            phi[k] += leaf.phi[k];
            valid[k] &= leaf.valid[k];
        }
    }
    let metadata = TraceMetadata {
        d_res_il: common(leaves.iter().map(|l| l.metadata.d_res_il)),
        pumps: leaves
            .iter()
            .flat_map(|l| l.metadata.pumps.iter().copied())
            .collect(),
        seed: common(leaves.iter().map(|l| l.metadata.seed)),
    };
    Ok(XpmNoiseTrace::assemble(
        first.sample_rate,
        n,
        phi,
        valid,
        metadata,
        leaves,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::make_grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn probe(n: usize, seed: u64) -> SampledField {
        let grid = make_grid(n, 64e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| Complex64::from_polar(1e-2 * rng.gen_range(0.5..1.5), rng.gen_range(-PI..PI)))
            .collect();
        SampledField::new(grid, samples).unwrap()
    }

    fn meta(df: f64) -> TraceMetadata {
        TraceMetadata::single(ResidualDispersion::PerSpan(50.0), df, 1.0, 1)
    }

    fn random_trace(len: usize, seed: u64, df: f64) -> XpmNoiseTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (0..len)
            .map(|_| 1.0 + 0.05 * rng.gen_range(-1.0..1.0))
            .collect();
        let phi = (0..len).map(|_| 0.1 * rng.gen_range(-1.0..1.0)).collect();
        let valid = (0..len).map(|_| rng.gen_bool(0.95)).collect();
        XpmNoiseTrace::from_polar(64e9, n, phi, valid, meta(df)).unwrap()
    }

    #[test]
    fn identity_ratio() {
        let a = probe(1024, 1);
        let t = extract_rho(&a, &a, meta(50e9)).unwrap();
        assert!(t.n.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(t.phi.iter().all(|&p| p.abs() < 1e-15));
        assert_eq!(t.amp_variance, 0.0);
        assert_eq!(t.phase_std, 0.0);
        t.check().unwrap();
    }

    #[test]
    fn constant_rotation() {
        let a = probe(1024, 2);
        let mut rx = a.clone();
        rx.samples
            .iter_mut()
            .for_each(|x| *x *= Complex64::from_polar(1.0, 0.1));
        let t = extract_rho(&rx, &a, meta(50e9)).unwrap();
        assert!(t.phase_std < 1e-12);
        assert!((t.mean_phase - 0.1).abs() < 1e-12);
    }

    #[test]
    fn masking_bridges_gaps_and_errors_when_excessive() {
        let mut a = probe(1024, 3);
        for k in (0..1024).step_by(8) {
            a.samples[k] *= 1e-4;
        }
        let mut rx = a.clone();
        // a huge ratio on masked samples must not leak into the statistics
        for k in (0..1024).step_by(8) {
            rx.samples[k] = Complex64::new(1.0, 1.0);
        }
        let t = extract_rho(&rx, &a, meta(50e9)).unwrap();
        assert_eq!(t.masked_count(), 128);
        assert!(t.phase_std < 1e-12 && t.amp_variance < 1e-20);
        for x in a.samples.iter_mut().take(600) {
            *x = Complex64::new(0.0, 0.0);
        }
        assert!(matches!(
            extract_rho(&rx, &a, meta(50e9)),
            Err(Error::ExcessiveMasking {
                masked: 653,
                total: 1024
            })
        ));
    }

    #[test]
    fn unwrap_removes_slips() {
        let truth: Vec<f64> = (0..500).map(|k| 0.05 * k as f64).collect();
        let wrapped: Vec<f64> = truth
            .iter()
            .map(|p| Complex64::from_polar(1.0, *p).arg())
            .collect();
        let un = unwrap_phase(&wrapped);
        for (u, t) in un.iter().zip(&truth) {
            assert!((u - t).abs() < 1e-9);
        }
    }

    #[test]
    fn dip_through_origin_leaves_no_slip() {
        let mut rho = vec![Complex64::new(1.0, 0.0); 1000];
        rho[500] = Complex64::from_polar(0.05, 2.0);
        rho[501] = Complex64::from_polar(0.05, -2.0);
        let sequential = unwrap_phase(&rho.iter().map(|r| r.arg()).collect::<Vec<_>>());
        assert!((sequential[999] - 2.0 * PI).abs() < 1e-9);
        let phi = rho_phase(&rho, 64e9);
        assert!(phi[999].abs() < 1e-12 && phi[0].abs() < 1e-12);
        assert!((phi[500] - 2.0).abs() < 1e-12 && (phi[501] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let a = probe(2048, 4);
        let n = a.len();
        let delayed = SampledField {
            samples: (0..n).map(|t| a.samples[(t + n - 7) % n]).collect(),
            ..a.clone()
        };
        let al = align_fields(&delayed, &a).unwrap();
        assert_eq!(al.delay_samples, 7);
        assert!(al
            .field
            .samples
            .iter()
            .zip(&a.samples)
            .all(|(x, y)| (x - y).norm() < 1e-15));

        let same = align_fields(&a, &a).unwrap();
        assert_eq!(same.delay_samples, 0);
        assert!(same.residual_phase.abs() < 1e-12);

        let mut rotated = a.clone();
        rotated
            .samples
            .iter_mut()
            .for_each(|x| *x *= Complex64::from_polar(1.0, PI / 5.0));
        let r = align_fields(&rotated, &a).unwrap();
        assert!((r.residual_phase - PI / 5.0).abs() < 1e-6);
        assert!(relative_rms_c(&r.field.samples, &a.samples) < 1e-12);
    }

    fn relative_rms_c(a: &[Complex64], b: &[Complex64]) -> f64 {
        crate::signal::relative_rms(a, b)
    }

    #[test]
    fn periodic_reference_is_ambiguous() {
        let grid = make_grid(1024, 64e9).unwrap();
        let samples = (0..1024)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k % 64) as f64 / 64.0 * 3.0))
            .collect();
        let a = SampledField::new(grid, samples).unwrap();
        assert!(matches!(
            align_fields(&a, &a),
            Err(Error::AmbiguousAlignment { .. })
        ));
    }

    #[test]
    fn scale_consistency() {
        let a = probe(2048, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rx: Vec<Complex64> = a
            .samples
            .iter()
            .map(|x| {
                x * Complex64::from_polar(
                    1.0 + 0.01 * rng.gen_range(-1.0..1.0),
                    0.05 * rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let rx = SampledField {
            samples: rx,
            ..a.clone()
        };
        let t = extract_rho(&rx, &a, meta(50e9)).unwrap();
        let mut scaled = rx.clone();
        scaled.samples.iter_mut().for_each(|x| *x *= 3.0);
        let s = extract_rho(&scaled, &a, meta(50e9)).unwrap();
        for (x, y) in s.n.iter().zip(&t.n) {
            assert!((x - 3.0 * y).abs() < 1e-12);
        }
        assert!((s.phase_std - t.phase_std).abs() < 1e-12);
    }

    #[test]
    fn superpose_singleton_and_identity() {
        let x = random_trace(4096, 1, 50e9);
        assert_eq!(superpose(std::slice::from_ref(&x)).unwrap(), x);
        let id = XpmNoiseTrace::identity(4096, 64e9);
        assert_eq!(superpose(&[x.clone(), id.clone()]).unwrap(), x);
        assert_eq!(superpose(&[id.clone(), x.clone()]).unwrap(), x);
        assert_eq!(superpose(std::slice::from_ref(&id)).unwrap(), id);
        assert!(matches!(
            superpose(&[x, random_trace(100, 2, 1e11)]),
            Err(Error::LengthMismatch(4096, 100))
        ));
    }

    #[test]
    fn superpose_metadata_lists_pumps() {
        let a = random_trace(512, 1, 50e9);
        let b = random_trace(512, 2, 100e9);
        let s = superpose(&[b, a]).unwrap();
        assert_eq!(s.metadata.pumps.len(), 2);
        assert_eq!(s.metadata.pumps[0].delta_f, 50e9);
        assert_eq!(s.metadata.d_res_il, Some(ResidualDispersion::PerSpan(50.0)));
        assert_eq!(s.constituent_count(), 2);
        s.check().unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn superpose_is_associative_and_commutative(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000, len in 64usize..600) {
            let a = random_trace(len, s1, 50e9);
            let b = random_trace(len, s2, 100e9);
            let c = random_trace(len, s3, 150e9);
            let left = superpose(&[superpose(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
            let right = superpose(&[a.clone(), superpose(&[b.clone(), c.clone()]).unwrap()]).unwrap();
            let flat = superpose(&[c.clone(), a.clone(), b.clone()]).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(&left, &flat);
            prop_assert!(left.reconstruction_error() < 1e-12);
            prop_assert!(left.phase_std <= a.phase_std + b.phase_std + c.phase_std + 1e-12);
        }

        #[test]
        fn extracted_traces_reconstruct(seed in 0u64..1000, strength in 0.0f64..3.0) {
            let a = probe(1024, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let rx: Vec<Complex64> = a.samples.iter()
                .map(|x| x * Complex64::from_polar(rng.gen_range(0.8..1.2), strength * rng.gen_range(-1.0..1.0)))
                .collect();
            let rx = SampledField { samples: rx, ..a.clone() };
            let t = extract_rho(&rx, &a, meta(50e9)).unwrap();
            prop_assert!(t.reconstruction_error() < 1e-12);
            prop_assert!(t.n.iter().all(|&x| x >= 0.0));
            if strength < FRAC_PI_2 {
                prop_assert!(t.phi.iter().all(|p| p.abs() <= strength + 1e-12));
            }
        }
    }
}
