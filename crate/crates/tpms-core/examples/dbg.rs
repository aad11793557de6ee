use tpms_core::divisor::{DivisorPoint, SymmetricDivisorSpec};
use tpms_core::theta::TorusParams;
use tpms_core::weierstrass::*;
use num_rational::Rational64;

fn main() {
    let t = TorusParams::new(1.0).unwrap();
    let d = SymmetricDivisorSpec::new(
        t,
        vec![DivisorPoint::new(0.25, Rational64::new(1, 2))],
        vec![],
    ).unwrap().expand().unwrap();
    for nu in [16usize, 32, 64, 128] {
        let p = make_patch(&d, nu, nu/2, &PatchOptions::default()).unwrap();
        println!("nu={nu}: conf(0.1)={:.3e} conf(0.15)={:.3e} norm={:.3e} harm={:.3e}",
            p.conformality_error(0.1), p.conformality_error(0.15),
            p.normal_consistency_error(0.1), p.harmonicity_residual(0.1));
    }
}
