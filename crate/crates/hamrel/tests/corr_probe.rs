use hamrel::doubling::*;
use hamrel::extension::*;
use hamrel::instances::*;
use hamrel::subspace::Subspace;
use hamrel::system::*;
use hamrel::tol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn probe_correspondence() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let iv = IntegerInterval::new(0, 5).unwrap();
    let spec = InstanceSpec { n: 1, interval: iv, rho: 0.5, weights: WeightKind::RandomPd, hermitian: false };
    let coeffs = random_field(&mut rng, &spec);
    let rel = SystemRelations::build(&coeffs, tol::RANK_REL, tol::REPRESENTATIVE_RESIDUAL).unwrap();
    let lab = DoubledLab::build(&coeffs, &rel.space, tol::RANK_REL).unwrap();
    println!("r = {}, H dim = {}, H0 dim = {}", rel.space.rank(), rel.side1.maximal().dim(), rel.side1.minimal().dim());
    for dim in 0..=4 {
        for trial in 0..2 {
            let qc = Subspace::from_orthonormal(random_subspace(&mut rng, 4, dim)).unwrap();
            let rep = correspondence_check(&rel, &lab, &qc, tol::RANK_REL, tol::SUBSPACE_ANGLE).unwrap();
            println!(
                "dim Qc = {dim} trial {trial}: quasi_dims = {:?} quasi = {} | boldT gap = {:.3e} sa = {} | bicond = {} | corollary: h10_quasi={} boldH0_sa={}",
                rep.quasi_dims, rep.t_quasi_self_adjoint, rep.bold_t_adjoint_gap,
                rep.bold_t_self_adjoint, rep.biconditional, rep.h10_quasi, rep.bold_h0_self_adjoint
            );
        }
    }
}
