"""How few measurement settings does one witness need?

Full tomography of three qubits needs all 27 local Pauli settings.
A witness operator only needs settings covering its Pauli support:
setting (s1, s2, s3) covers string (p1, p2, p3) when every non-identity
p_i equals s_i.  The minimal cover is found by exact set-cover search.
"""

from gme.estimators import PureProjector, TwoProjectorMix, realize
from gme.qstate import (
    ALL_SETTINGS,
    bisep,
    ghz,
    pauli_support,
    required_settings,
    w_state,
)

OPERATORS = {
    "GHZ projector": realize(PureProjector(ghz())),
    "W projector": realize(PureProjector(w_state())),
    "Bisep projector": realize(PureProjector(bisep())),
    "Bisep + W mix": realize(TwoProjectorMix(bisep(), w_state(), 1.0, 1.0)),
}


def main():
    print(f"full tomography: {len(ALL_SETTINGS)} settings")
    print()
    print("operator         support  minimal settings")
    for name, op in OPERATORS.items():
        support = [s for s in pauli_support(op) if s != "000"]
        settings = sorted(required_settings(op))
        print(f"{name:16s} {len(support):7d}  {len(settings)} {settings}")
    print()
    print("The witness mix needs a quarter of the tomography effort, which")
    print("is the point of measuring one operator instead of the full state.")


if __name__ == "__main__":
    main()
