use qhomog::experiment::{cmd_homogenize_qasm, cmd_simulate, simulate_trajectory, SpecBuilder};
use qhomog::linalg::{self, CVector, ONE};
use qhomog::qasm;
use qhomog::states::DensityMatrix;

fn wire0_after(text: &str) -> DensityMatrix {
    let program = qasm::parse(text).unwrap();
    let n = program.circuit.num_qubits();
    let mut zero = CVector::zeros(1 << n);
    zero[0] = ONE;
    let psi = program.circuit.simulate(&zero).unwrap();
    DensityMatrix::pure(psi.as_slice()).unwrap().reduce(&[0]).unwrap()
}

#[test]
fn emitted_circuit_matches_reduced_trajectory() {
    for (initial, reservoir, coupling) in
        [("1", "0", "alpha = 0.25"), ("+", "i", "eta = -0.9"), ("bloch:0.6,0,0.8", "-", "alpha = 0.7"), ("-i", "1", "eta = 2.5")]
    {
        for rounds in 0..=6 {
            let text = format!("initial = {initial}\nreservoir = {reservoir}\n{coupling}\nrounds = {rounds}\n");
            let spec = SpecBuilder::parse(&text).unwrap().build().unwrap();
            let expected = simulate_trajectory(&spec).unwrap();
            let got = wire0_after(&cmd_homogenize_qasm(&spec).unwrap());
            let err = linalg::frobenius_distance(got.matrix(), expected.final_state().matrix());
            assert!(err < 1e-8, "{text}: {err}");
        }
    }
}

#[test]
fn simulate_is_deterministic() {
    let spec = SpecBuilder::parse("initial = bloch:0.1,0.2,0.3\nreservoir = -\neta = 1.1\nrounds = 9\nmode = full\n")
        .unwrap()
        .build()
        .unwrap();
    assert_eq!(cmd_simulate(&spec).unwrap(), cmd_simulate(&spec).unwrap());
}
