use hybrid_tn::oracles::{exact_ground_energy_with, EdMethod, LanczosOptions, OperatorForm, SparseOperator};
use hybrid_tn::pauli::{FieldStrengths, SpinModel};

// 16 qubits is past the dense limit, so the two Lanczos operator forms only
// have each other to agree with.
#[test]
fn matrix_free_and_sparse_lanczos_agree_at_sixteen_qubits() {
    for (model, n, k) in [(SpinModel::Cluster1d, 8, 2), (SpinModel::Web2d, 8, 2)] {
        let (h, _) = model.build::<f64>(n, k, 1.0, 3, &FieldStrengths::default()).unwrap();
        assert_eq!(h.num_qubits(), 16);
        let sparse = SparseOperator::from_hamiltonian(&h).unwrap();
        assert_eq!(sparse.dim(), 1 << 16);

        let run = |form| {
            let opts = LanczosOptions { form, ..Default::default() };
            exact_ground_energy_with(&h, EdMethod::Lanczos, &opts).unwrap()
        };
        let free = run(OperatorForm::MatrixFree);
        let assembled = run(OperatorForm::Sparse);
        assert!(
            (free.energy - assembled.energy).abs() < 1e-8,
            "{model:?}: {} vs {}",
            free.energy,
            assembled.energy
        );
        assert!(free.residual < 1e-8 && assembled.residual < 1e-8);
        assert!((free.state.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
