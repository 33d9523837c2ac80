#![allow(dead_code)]

use atomlaser::fock::{composite_lowering, field_annihilation};
use atomlaser::{ComplexMatrix, DensityMatrix, ModelParams, SpaceConfig, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn space(n_max: usize) -> SpaceConfig {
    SpaceConfig::new(n_max).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// `G G† / Tr(G G†)` for a random complex `G`: positive, Hermitian, unit trace.
pub fn random_state(rng: &mut ChaCha8Rng, space: SpaceConfig) -> DensityMatrix {
    let d = space.dim();
    let g = random_matrix(rng, d, d);
    let m = g.dot(&g.adjoint());
    let tr = m.trace().re;
    let m = ComplexMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(m[(r, c)].re / tr, 0.0)
        } else {
            m[(r, c)] / tr
        }
    });
    DensityMatrix::new(space, m).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(
        rng.gen_range(0.0..2.0),
        rng.gen_range(0.0..2.0),
        rng.gen_range(0.0..2.0),
    )
    .unwrap()
}

fn dissipator(l: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let ld = l.adjoint();
    let ldl = ld.dot(l);
    let jump = l.dot(rho).dot(&ld).scale(C64::new(2.0, 0.0));
    &(&jump - &ldl.dot(rho)) - &rho.dot(&ldl)
}

/// Dense reference right-hand side written term by term from the operators.
pub fn reference_rhs(rho: &DensityMatrix, p: ModelParams) -> ComplexMatrix {
    let space = rho.space();
    let a = field_annihilation(space);
    let s = composite_lowering(space);
    let r = rho.matrix();
    let k = &a.adjoint().dot(&s) - &s.adjoint().dot(&a);
    let mut out = k.commutator(r).scale(C64::new(0.5, 0.0));
    for (rate, l) in [
        (p.tau(), a.clone()),
        (p.eta(), s.clone()),
        (p.omega(), s.adjoint()),
    ] {
        out = &out + &dissipator(&l, r).scale(C64::new(rate / 2.0, 0.0));
    }
    out
}
