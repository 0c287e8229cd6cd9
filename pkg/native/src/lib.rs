//! BLS12-381 kernels for the BBS scheme, on top of blst.
//!
//! Everything crosses the boundary as bytes: points in compressed form
//! (48 bytes in G1, 96 in G2), scalars as 32-byte big-endian integers
//! strictly below the group order. The Python side owns all scalar
//! arithmetic; this crate only does the curve work.

use blstrs::{Bls12, G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Gt, Scalar};
use group::prime::PrimeCurveAffine;
use group::Group;
use pairing::{MillerLoopResult, MultiMillerLoop};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn scalar_from_be(bytes: &[u8]) -> PyResult<Scalar> {
    let arr: [u8; 32] = bytes
        .try_into()
        .map_err(|_| PyValueError::new_err("scalar must be 32 bytes"))?;
    Option::from(Scalar::from_bytes_be(&arr))
        .ok_or_else(|| PyValueError::new_err("scalar not below group order"))
}

fn g1_from(bytes: &[u8]) -> PyResult<G1Affine> {
    let arr: [u8; 48] = bytes
        .try_into()
        .map_err(|_| PyValueError::new_err("G1 point must be 48 bytes"))?;
    Option::from(G1Affine::from_compressed(&arr))
        .ok_or_else(|| PyValueError::new_err("invalid G1 point encoding"))
}

fn g2_from(bytes: &[u8]) -> PyResult<G2Affine> {
    let arr: [u8; 96] = bytes
        .try_into()
        .map_err(|_| PyValueError::new_err("G2 point must be 96 bytes"))?;
    Option::from(G2Affine::from_compressed(&arr))
        .ok_or_else(|| PyValueError::new_err("invalid G2 point encoding"))
}

fn parse_pairs<P, F>(points: &[Vec<u8>], scalars: &[Vec<u8>], dec: F) -> PyResult<(Vec<P>, Vec<Scalar>)>
where
    F: Fn(&[u8]) -> PyResult<P>,
{
    if points.len() != scalars.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    let pts = points.iter().map(|p| dec(p)).collect::<PyResult<Vec<_>>>()?;
    let scs = scalars.iter().map(|s| scalar_from_be(s)).collect::<PyResult<Vec<_>>>()?;
    Ok((pts, scs))
}

// blst's Pippenger routine is only worth it (and only exercised upstream)
// for a handful of terms or more; short sums use plain multiplication.
const MSM_THRESHOLD: usize = 4;

/// Sum of scalars[i] * points[i] in G1.
#[pyfunction]
fn g1_msm<'py>(py: Python<'py>, points: Vec<Vec<u8>>, scalars: Vec<Vec<u8>>) -> PyResult<Bound<'py, PyBytes>> {
    let (pts, scs) = parse_pairs(&points, &scalars, g1_from)?;
    let acc = py.allow_threads(|| {
        if pts.len() < MSM_THRESHOLD {
            pts.iter().zip(&scs).fold(G1Projective::identity(), |acc, (p, s)| acc + G1Projective::from(p) * s)
        } else {
            let proj: Vec<G1Projective> = pts.iter().map(G1Projective::from).collect();
            G1Projective::multi_exp(&proj, &scs)
        }
    });
    Ok(PyBytes::new_bound(py, &G1Affine::from(acc).to_compressed()))
}

/// Sum of scalars[i] * points[i] in G2.
#[pyfunction]
fn g2_msm<'py>(py: Python<'py>, points: Vec<Vec<u8>>, scalars: Vec<Vec<u8>>) -> PyResult<Bound<'py, PyBytes>> {
    let (pts, scs) = parse_pairs(&points, &scalars, g2_from)?;
    let acc = py.allow_threads(|| {
        pts.iter().zip(&scs).fold(G2Projective::identity(), |acc, (p, s)| acc + G2Projective::from(p) * s)
    });
    Ok(PyBytes::new_bound(py, &G2Affine::from(acc).to_compressed()))
}

#[pyfunction]
fn g1_generator(py: Python<'_>) -> Bound<'_, PyBytes> {
    PyBytes::new_bound(py, &G1Affine::generator().to_compressed())
}

#[pyfunction]
fn g2_generator(py: Python<'_>) -> Bound<'_, PyBytes> {
    PyBytes::new_bound(py, &G2Affine::generator().to_compressed())
}

/// True iff the bytes decode to a point of the prime-order subgroup of G1.
#[pyfunction]
fn g1_is_valid(bytes: &[u8]) -> bool {
    g1_from(bytes).is_ok()
}

#[pyfunction]
fn g2_is_valid(bytes: &[u8]) -> bool {
    g2_from(bytes).is_ok()
}

/// hash_to_curve with BLS12381G1_XMD:SHA-256_SSWU_RO_ under the given DST.
#[pyfunction]
fn hash_to_g1<'py>(py: Python<'py>, msg: &[u8], dst: &[u8]) -> Bound<'py, PyBytes> {
    let p = G1Projective::hash_to_curve(msg, dst, &[]);
    PyBytes::new_bound(py, &G1Affine::from(p).to_compressed())
}

/// True iff prod e(g1s[i], g2s[i]) is the identity of GT.
#[pyfunction]
fn pairing_product_is_one(py: Python<'_>, g1s: Vec<Vec<u8>>, g2s: Vec<Vec<u8>>) -> PyResult<bool> {
    if g1s.len() != g2s.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    let left = g1s.iter().map(|b| g1_from(b)).collect::<PyResult<Vec<_>>>()?;
    let right = g2s
        .iter()
        .map(|b| g2_from(b).map(G2Prepared::from))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(py.allow_threads(|| {
        let terms: Vec<(&G1Affine, &G2Prepared)> = left.iter().zip(right.iter()).collect();
        Bls12::multi_miller_loop(&terms).final_exponentiation() == Gt::identity()
    }))
}

#[pymodule]
fn _native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(g1_msm, m)?)?;
    m.add_function(wrap_pyfunction!(g2_msm, m)?)?;
    m.add_function(wrap_pyfunction!(g1_generator, m)?)?;
    m.add_function(wrap_pyfunction!(g2_generator, m)?)?;
    m.add_function(wrap_pyfunction!(g1_is_valid, m)?)?;
    m.add_function(wrap_pyfunction!(g2_is_valid, m)?)?;
    m.add_function(wrap_pyfunction!(hash_to_g1, m)?)?;
    m.add_function(wrap_pyfunction!(pairing_product_is_one, m)?)?;
    Ok(())
}
