use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::lwe::{LweDim, LweSecretKey};
use super::noise::{gaussian_torus, uniform_bit, uniform_torus};
use super::OpCounters;
use crate::error::{Error, Result};
use crate::fft::{
    forward_fft_bounded, forward_fft_torus, inverse_fft_torus, negacyclic_mul, FftMode, FftPlan, LimbLayout,
    TorusSpectrum,
};
use crate::torus::{poly_gadget_decompose, schoolbook_negacyclic, GadgetParams, IntPolynomial, TorusPolynomial};

/// Binary GLWE secret key: `k` polynomials of degree `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlweSecretKey {
    polys: Vec<IntPolynomial>,
}

impl GlweSecretKey {
    pub fn generate<R: RngCore>(k: usize, degree: usize, rng: &mut R) -> Self {
        let polys = (0..k)
            .map(|_| IntPolynomial::from_coeffs((0..degree).map(|_| uniform_bit(rng) as i64).collect()))
            .collect();
        GlweSecretKey { polys }
    }

    pub fn polys(&self) -> &[IntPolynomial] {
        &self.polys
    }

    pub fn k(&self) -> usize {
        self.polys.len()
    }

    pub fn degree(&self) -> usize {
        self.polys[0].degree()
    }

    /// Long LWE key `s'_{i N + j} = s_i[j]`, the key of sample-extracted
    /// ciphertexts.
    pub fn flatten(&self) -> LweSecretKey {
        let bits = self
            .polys
            .iter()
            .flat_map(|p| p.coeffs().iter().map(|&c| c as u8))
            .collect();
        LweSecretKey::from_bits(bits, LweDim::Long)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlweCiphertext {
    pub mask: Vec<TorusPolynomial>,
    pub body: TorusPolynomial,
}

impl GlweCiphertext {
    pub fn trivial(body: TorusPolynomial, k: usize) -> Self {
        let n = body.degree();
        GlweCiphertext {
            mask: (0..k).map(|_| TorusPolynomial::zero(n)).collect(),
            body,
        }
    }

    pub fn zero(k: usize, degree: usize) -> Self {
        Self::trivial(TorusPolynomial::zero(degree), k)
    }

    pub fn k(&self) -> usize {
        self.mask.len()
    }

    pub fn degree(&self) -> usize {
        self.body.degree()
    }

    /// Mask polynomials followed by the body.
    pub fn components(&self) -> impl Iterator<Item = &TorusPolynomial> {
        self.mask.iter().chain(core::iter::once(&self.body))
    }

    fn components_mut(&mut self) -> impl Iterator<Item = &mut TorusPolynomial> {
        self.mask.iter_mut().chain(core::iter::once(&mut self.body))
    }

    fn check_shape(&self, other: &GlweCiphertext) -> Result<()> {
        if self.k() != other.k() || self.degree() != other.degree() {
            return Err(Error::DimensionMismatch {
                expected: self.degree() * (self.k() + 1),
                got: other.degree() * (other.k() + 1),
            });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &GlweCiphertext) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.components_mut().zip(other.components()) {
            a.add_assign(b);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &GlweCiphertext) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.components_mut().zip(other.components()) {
            a.sub_assign(b);
        }
        Ok(())
    }

    /// `X^e * self` for `e` in `[0, 2N)`.
    pub fn monomial_mul(&self, e: usize) -> GlweCiphertext {
        GlweCiphertext {
            mask: self.mask.iter().map(|p| p.monomial_mul(e)).collect(),
            body: self.body.monomial_mul(e),
        }
    }
}

fn key_dot(c_mask: &[TorusPolynomial], key: &GlweSecretKey, plan: &FftPlan) -> Result<TorusPolynomial> {
    let mut acc = TorusPolynomial::zero(plan.degree());
    for (a, s) in c_mask.iter().zip(key.polys()) {
        acc.add_assign(&negacyclic_mul(s, a, plan, FftMode::Reference)?);
    }
    Ok(acc)
}

/// GLWE encryption of the torus polynomial `mu` with noise `std`.
pub fn encrypt_glwe<R: RngCore>(
    mu: &TorusPolynomial,
    key: &GlweSecretKey,
    std: f64,
    plan: &FftPlan,
    rng: &mut R,
) -> Result<GlweCiphertext> {
    let n = plan.degree();
    plan_matches(plan, key.degree())?;
    let mask: Vec<TorusPolynomial> = (0..key.k())
        .map(|_| TorusPolynomial::from_coeffs((0..n).map(|_| uniform_torus(rng)).collect()))
        .collect();
    let mut body = key_dot(&mask, key, plan)?;
    body.add_assign(mu);
    for c in body.coeffs_mut() {
        *c += gaussian_torus(rng, std);
    }
    Ok(GlweCiphertext { mask, body })
}

/// `body - sum mask_i * s_i`.
pub fn glwe_phase(c: &GlweCiphertext, key: &GlweSecretKey, plan: &FftPlan) -> Result<TorusPolynomial> {
    if c.k() != key.k() {
        return Err(Error::DimensionMismatch {
            expected: key.k(),
            got: c.k(),
        });
    }
    plan_matches(plan, c.degree())?;
    let mut out = c.body.clone();
    out.sub_assign(&key_dot(&c.mask, key, plan)?);
    Ok(out)
}

fn plan_matches(plan: &FftPlan, degree: usize) -> Result<()> {
    if plan.degree() != degree {
        return Err(Error::PlanMismatch {
            plan: plan.degree(),
            got: degree,
        });
    }
    Ok(())
}

/// Fourier-domain copy of a GGSW matrix: `(k+1) d` rows by `k+1` columns of
/// limb spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct GgswSpectrum {
    mode: FftMode,
    layout: LimbLayout,
    entries: Vec<Vec<TorusSpectrum>>,
}

impl GgswSpectrum {
    pub fn mode(&self) -> FftMode {
        self.mode
    }

    pub fn layout(&self) -> LimbLayout {
        self.layout
    }
}

/// GGSW encryption of a small integer: `(k+1) d` GLWE rows. Row
/// `i d + j` carries `mu * 2^(64 - (j+1) base_log)` on component `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GgswCiphertext {
    rows: Vec<GlweCiphertext>,
    gadget: GadgetParams,
    spectrum: Option<GgswSpectrum>,
}

impl GgswCiphertext {
    pub fn from_rows(rows: Vec<GlweCiphertext>, gadget: GadgetParams) -> Result<Self> {
        let k = rows.first().map(GlweCiphertext::k).unwrap_or(0);
        if rows.len() != (k + 1) * gadget.depth as usize {
            return Err(Error::DimensionMismatch {
                expected: (k + 1) * gadget.depth as usize,
                got: rows.len(),
            });
        }
        Ok(GgswCiphertext {
            rows,
            gadget,
            spectrum: None,
        })
    }

    pub fn rows(&self) -> &[GlweCiphertext] {
        &self.rows
    }

    pub fn gadget(&self) -> GadgetParams {
        self.gadget
    }

    pub fn k(&self) -> usize {
        self.rows[0].k()
    }

    pub fn spectrum(&self) -> Option<&GgswSpectrum> {
        self.spectrum.as_ref()
    }

    /// Computes and stores the Fourier-domain matrix for `mode`.
    pub fn prepare(&mut self, plan: &FftPlan, mode: FftMode) -> Result<()> {
        let rows = self.rows.len();
        let layout = LimbLayout::for_product(mode, plan, self.gadget.base_log, rows);
        let entries = self
            .rows
            .iter()
            .map(|row| {
                row.components()
                    .map(|p| forward_fft_torus(p, plan, mode, layout))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        self.spectrum = Some(GgswSpectrum { mode, layout, entries });
        Ok(())
    }
}

pub fn encrypt_ggsw<R: RngCore>(
    mu: i64,
    key: &GlweSecretKey,
    gadget: GadgetParams,
    std: f64,
    plan: &FftPlan,
    rng: &mut R,
) -> Result<GgswCiphertext> {
    let k = key.k();
    let n = key.degree();
    let zero = TorusPolynomial::zero(n);
    let mut rows = Vec::with_capacity((k + 1) * gadget.depth as usize);
    for i in 0..=k {
        for j in 0..gadget.depth {
            let mut row = encrypt_glwe(&zero, key, std, plan, rng)?;
            let w = gadget.level_weight(j + 1).scalar_mul(mu);
            let target = if i < k { &mut row.mask[i] } else { &mut row.body };
            target.coeffs_mut()[0] += w;
            rows.push(row);
        }
    }
    GgswCiphertext::from_rows(rows, gadget)
}

fn decompose(c: &GlweCiphertext, gadget: GadgetParams) -> Vec<IntPolynomial> {
    c.components().flat_map(|p| poly_gadget_decompose(p, gadget)).collect()
}

/// `g ⊡ c` through the Fourier domain. Uses the stored spectrum, computing a
/// reference-mode one on the fly if `g` was never prepared.
pub fn external_product(g: &GgswCiphertext, c: &GlweCiphertext, plan: &FftPlan) -> Result<GlweCiphertext> {
    external_product_counted(g, c, plan, &mut OpCounters::default())
}

pub(crate) fn external_product_counted(
    g: &GgswCiphertext,
    c: &GlweCiphertext,
    plan: &FftPlan,
    counters: &mut OpCounters,
) -> Result<GlweCiphertext> {
    if c.k() != g.k() {
        return Err(Error::DimensionMismatch {
            expected: g.k(),
            got: c.k(),
        });
    }
    plan_matches(plan, c.degree())?;
    let prepared;
    let spec = match &g.spectrum {
        Some(s) => s,
        None => {
            let mut tmp = g.clone();
            tmp.prepare(plan, FftMode::Reference)?;
            prepared = tmp.spectrum.expect("prepared above");
            &prepared
        }
    };
    let gadget = g.gadget;
    let digits = decompose(c, gadget);
    let rows = digits.len();
    let mut acc: Vec<TorusSpectrum> = (0..=c.k())
        .map(|_| TorusSpectrum::accumulator(plan, spec.mode, spec.layout, gadget.base_log, rows))
        .collect();
    for (digit, row) in digits.iter().zip(&spec.entries) {
        let f = forward_fft_bounded(digit, plan, spec.mode, gadget.base_log)?;
        counters.forward_ffts += 1;
        for (a, entry) in acc.iter_mut().zip(row) {
            a.mac_assign(&f, entry)?;
            counters.macs += 1;
        }
    }
    let mut comps = acc
        .iter()
        .map(|a| inverse_fft_torus(a, plan))
        .collect::<Result<Vec<_>>>()?;
    counters.inverse_ffts += comps.len();
    counters.external_products += 1;
    let body = comps.pop().expect("k + 1 components");
    Ok(GlweCiphertext { mask: comps, body })
}

/// `g ⊡ c` by direct `O(N^2)` convolutions on the time-domain rows.
pub fn external_product_schoolbook(g: &GgswCiphertext, c: &GlweCiphertext) -> Result<GlweCiphertext> {
    if c.k() != g.k() {
        return Err(Error::DimensionMismatch {
            expected: g.k(),
            got: c.k(),
        });
    }
    let mut out = GlweCiphertext::zero(c.k(), c.degree());
    for (digit, row) in decompose(c, g.gadget).iter().zip(&g.rows) {
        for (o, p) in out.components_mut().zip(row.components()) {
            o.add_assign(&schoolbook_negacyclic(digit, p));
        }
    }
    Ok(out)
}

/// `c0 + g ⊡ (c1 - c0)`: selects `c1` when `g` encrypts 1 and `c0` when it
/// encrypts 0.
pub fn cmux(g: &GgswCiphertext, c0: &GlweCiphertext, c1: &GlweCiphertext, plan: &FftPlan) -> Result<GlweCiphertext> {
    cmux_counted(g, c0, c1, plan, &mut OpCounters::default())
}

pub(crate) fn cmux_counted(
    g: &GgswCiphertext,
    c0: &GlweCiphertext,
    c1: &GlweCiphertext,
    plan: &FftPlan,
    counters: &mut OpCounters,
) -> Result<GlweCiphertext> {
    let mut diff = c1.clone();
    diff.sub_assign(c0)?;
    let mut out = external_product_counted(g, &diff, plan, counters)?;
    out.add_assign(c0)?;
    counters.cmux += 1;
    Ok(out)
}
