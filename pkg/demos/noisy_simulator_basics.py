"""Walk through the density-matrix simulator and its depolarizing channel.

Builds a small entangling circuit, pushes the state through increasing
amounts of local noise, and prints the trace, purity, and distance to the
maximally mixed state at each step.
"""

import numpy as np

from qknet import qsim


def main():
    n_qubits = 3
    dim = 2 ** n_qubits
    gates = [qsim.hadamard(0), qsim.cnot(0, 1), qsim.rot_y(2, 0.7),
             qsim.cnot(1, 2), qsim.rot_z(0, -1.1)]

    rho = qsim.apply_circuit(qsim.zero_state(n_qubits), gates)
    print("clean state:")
    print(f"  trace  = {np.trace(rho).real:+.12f}")
    print(f"  purity = {qsim.purity(rho):.12f}")

    maximally_mixed = np.eye(dim) / dim
    print("\nsame state under uniform local depolarizing:")
    print(f"{'p':>6} {'purity':>10} {'dist to I/D':>12}")
    for p in (0.0, 0.05, 0.2, 0.5, 0.9, 1.0):
        noisy = rho
        for q in range(n_qubits):
            noisy = qsim.apply_depolarizing_local(noisy, q, p)
        dist = np.max(np.abs(noisy - maximally_mixed))
        print(f"{p:6.2f} {qsim.purity(noisy):10.6f} {dist:12.2e}")

    # two channels on the same wire collapse into one
    p1, p2 = 0.1, 0.3
    twice = qsim.apply_depolarizing_local(
        qsim.apply_depolarizing_local(rho, 0, p1), 0, p2)
    once = qsim.apply_depolarizing_local(
        rho, 0, qsim.compose_depolarizing(p1, p2))
    print(f"\ncomposition: p={qsim.compose_depolarizing(p1, p2):.3f}, "
          f"max deviation {np.max(np.abs(twice - once)):.2e}")

    # Kraus form agrees with the direct mixture form
    kraus = qsim.depolarizing_kraus(0.25)
    via_kraus = qsim.apply_kraus(rho, kraus, qubit=1)
    direct = qsim.apply_depolarizing_local(rho, 1, 0.25)
    print(f"kraus vs mixture: max deviation "
          f"{np.max(np.abs(via_kraus - direct)):.2e}")


if __name__ == "__main__":
    main()
