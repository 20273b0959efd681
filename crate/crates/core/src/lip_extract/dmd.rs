//! Background/foreground separation by exact dynamic mode decomposition.
//!
//! Snapshots are flattened grayscale frames with a time step of one frame.
//! Modes whose continuous-time frequency |log(lambda)| falls below the
//! tolerance form the background; the foreground is the non-negative part
//! of what remains.

use nalgebra::{Complex, DMatrix, DVector};

use super::{ExtractError, GrayFrame};

type C64 = Complex<f64>;

// singular values below this fraction of the largest are treated as zero
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DmdSeparation {
    pub background: Vec<GrayFrame>,
    pub foreground: Vec<GrayFrame>,
    /// Discrete-time eigenvalues of the reduced operator.
    pub eigenvalues: Vec<C64>,
    /// Indices into `eigenvalues` of the modes kept as background.
    pub background_modes: Vec<usize>,
}

fn null_vector(m: DMatrix<C64>) -> Result<DVector<C64>, ExtractError> {
    let svd = m
        .try_svd(false, true, 1e-14, 10_000)
        .ok_or_else(|| ExtractError::Numerical("eigenvector SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Ok(v_t.row(idx).transpose().map(|z| z.conj()))
}

pub fn dmd_separate(
    frames: &[GrayFrame],
    rank: usize,
    omega_tol: f64,
) -> Result<DmdSeparation, ExtractError> {
    let n = frames.len();
    if n < 3 {
        return Err(ExtractError::TooFewFrames(n));
    }
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some(f) = frames.iter().find(|f| f.width != w || f.height != h) {
        return Err(ExtractError::DimensionMismatch(w, h, f.width, f.height));
    }
    if rank == 0 || rank > n - 1 {
        return Err(ExtractError::RankTooLarge { rank, max: n - 1 });
    }
    let d = w * h;
    let x = DMatrix::from_fn(d, n, |i, t| frames[t].data[i]);
    let x1 = x.columns(0, n - 1).into_owned();
    let x2 = x.columns(1, n - 1).into_owned();

    let svd = x1
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or_else(|| ExtractError::Numerical("snapshot SVD did not converge".into()))?;
    let sigma = &svd.singular_values;
    let top = sigma[0];
    let r = (0..rank.min(sigma.len()))
        .take_while(|&i| top > 0.0 && sigma[i] > RANK_TOL * top)
        .count();

    if r == 0 {
        // all-zero video: everything is background
        return Ok(DmdSeparation {
            background: frames.to_vec(),
            foreground: vec![GrayFrame::filled(w, h, 0.0); n],
            eigenvalues: vec![],
            background_modes: vec![],
        });
    }

    let u_r = svd.u.as_ref().expect("requested").columns(0, r).into_owned();
    let v_r = svd.v_t.as_ref().expect("requested").rows(0, r).transpose();
    let s_inv = DMatrix::from_diagonal(&DVector::from_fn(r, |i, _| 1.0 / sigma[i]));
    // X2 V S^-1, shared by the reduced operator and the modes
    let projected = &x2 * &v_r * &s_inv;
    let reduced = u_r.transpose() * &projected;

    let eigenvalues: Vec<C64> = reduced.complex_eigenvalues().iter().copied().collect();
    let reduced_c = reduced.map(|v| C64::new(v, 0.0));
    let mut eigvecs = DMatrix::<C64>::zeros(r, r);
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let shifted = &reduced_c - DMatrix::<C64>::identity(r, r) * lambda;
        eigvecs.set_column(j, &null_vector(shifted)?);
    }
    let modes = projected.map(|v| C64::new(v, 0.0)) * eigvecs;

    let first = x.column(0).map(|v| C64::new(v, 0.0));
    let amplitudes = modes
        .clone()
        .svd(true, true)
        .solve(&first, 1e-12)
        .map_err(|e| ExtractError::Numerical(e.to_string()))?;

    let background_modes: Vec<usize> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.norm() > 0.0 && l.ln().norm() < omega_tol)
        .map(|(j, _)| j)
        .collect();

    let mut background = Vec::with_capacity(n);
    let mut foreground = Vec::with_capacity(n);
    for t in 0..n {
        let mut bg = DVector::<C64>::zeros(d);
        for &j in &background_modes {
            let coeff = amplitudes[j] * eigenvalues[j].powu(t as u32);
            bg.axpy(coeff, &modes.column(j), C64::new(1.0, 0.0));
        }
        let bg: Vec<f64> = bg.iter().map(|z| z.re).collect();
        let fg: Vec<f64> = frames[t]
            .data
            .iter()
            .zip(&bg)
            .map(|(orig, b)| (orig - b).max(0.0))
            .collect();
        background.push(GrayFrame::new(w, h, bg));
        foreground.push(GrayFrame::new(w, h, fg));
    }

    Ok(DmdSeparation {
        background,
        foreground,
        eigenvalues,
        background_modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> GrayFrame {
        GrayFrame::new(
            w,
            h,
            (0..w * h)
                .map(|i| 40.0 + 120.0 * (i % w) as f64 / w as f64 + 30.0 * (i / w) as f64 / h as f64)
                .collect(),
        )
    }

    #[test]
    fn static_scene_is_all_background() {
        let frames = vec![gradient(16, 12); 6];
        let sep = dmd_separate(&frames, 3, 1e-2).unwrap();
        for (bg, orig) in sep.background.iter().zip(&frames) {
            for (b, o) in bg.data.iter().zip(&orig.data) {
                assert!((b - o).abs() <= 1e-6 * 255.0);
            }
        }
        for fg in &sep.foreground {
            assert!(fg.data.iter().all(|v| v.abs() <= 1e-6 * 255.0));
        }
    }

    #[test]
    fn foreground_plus_background_reconstructs_unclamped_pixels() {
        let mut frames = Vec::new();
        for t in 0..8 {
            let mut f = gradient(16, 12);
            for y in 4..8 {
                for x in t..t + 4 {
                    f.data[y * 16 + x] = 250.0;
                }
            }
            frames.push(f);
        }
        let sep = dmd_separate(&frames, 5, 1e-2).unwrap();
        for t in 0..frames.len() {
            for i in 0..frames[t].data.len() {
                let fg = sep.foreground[t].data[i];
                if fg > 0.0 {
                    let sum = fg + sep.background[t].data[i];
                    assert!((sum - frames[t].data[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn preconditions() {
        let f = gradient(4, 4);
        assert!(matches!(
            dmd_separate(&[f.clone(), f.clone()], 1, 1e-2),
            Err(ExtractError::TooFewFrames(2))
        ));
        assert!(matches!(
            dmd_separate(&[f.clone(), f.clone(), f.clone()], 3, 1e-2),
            Err(ExtractError::RankTooLarge { .. })
        ));
        let other = GrayFrame::filled(5, 4, 0.0);
        assert!(matches!(
            dmd_separate(&[f.clone(), f, other], 1, 1e-2),
            Err(ExtractError::DimensionMismatch(..))
        ));
    }
}
