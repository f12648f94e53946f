import numpy as np
import pytest

from dqfi.dsl import (Bin, Call, DissipatorDecl, HTerm, MatrixLiteral,
                      ModelSpec, Num, Param, ParseError, PauliString,
                      compile_model, diff_expr, eval_expr, parse_model, pretty,
                      print_expr)
from dqfi.model import ModelError, build_liouvillian, d_liouvillian
from dqfi.twolevel import spin_flip_model

SPIN_FLIP_SRC = """
# spin-flip benchmark
[system]
dim = 2
parameter = omega, default = 1.0

[hamiltonian]
H = 0.5*omega * Z

[dissipator]
rate = 0.7, op = X
"""

TWO_QUBIT_SRC = """
[system]
dim = 4
parameter = theta, default = 0.5

[hamiltonian]
H = ZI + 0.3*XX

[dissipator]
rate = 0.1*theta, op = IZ
"""

FIELD_ANGLE_SRC = """
[system]
dim = 2
parameter = theta, default = 0.3

[hamiltonian]
H = cos(theta) * X + sin(theta) * Z
"""


class TestParse:
    def test_spin_flip_shape(self):
        spec = parse_model(SPIN_FLIP_SRC)
        assert spec.system.dim == 2
        assert spec.system.parameter == "omega"
        assert len(spec.hamiltonian) == 1
        assert len(spec.dissipators) == 1
        term = spec.hamiltonian[0]
        assert isinstance(term.op, PauliString) and term.op.word == "Z"
        assert isinstance(term.coef, Bin) and term.coef.op == "*"

    def test_dissipator_prefix_style(self):
        src = SPIN_FLIP_SRC.replace("rate = 0.7, op = X",
                                    "dissipator: rate = 0.7, op = X")
        spec = parse_model(src)
        assert len(spec.dissipators) == 1

    def test_malformed_double_star(self):
        src = SPIN_FLIP_SRC.replace("H = 0.5*omega * Z", "H = 0.5* * Z")
        with pytest.raises(ParseError) as err:
            parse_model(src)
        assert err.value.line == 8
        assert err.value.col == 10
        assert err.value.expected

    def test_two_qubit_pauli_strings(self):
        spec = parse_model(TWO_QUBIT_SRC)
        assert spec.system.dim == 4
        words = [t.op.word for t in spec.hamiltonian]
        assert words == ["ZI", "XX"]

    def test_unknown_identifier(self):
        src = SPIN_FLIP_SRC.replace("0.5*omega", "0.5*omega_typo")
        with pytest.raises(ParseError) as err:
            parse_model(src)
        assert "omega_typo" in str(err.value)
        assert err.value.expected

    def test_unknown_function(self):
        src = SPIN_FLIP_SRC.replace("0.5*omega", "tan(omega)")
        with pytest.raises(ParseError):
            parse_model(src)

    def test_dimension_mismatch(self):
        src = TWO_QUBIT_SRC.replace("dim = 4", "dim = 2")
        with pytest.raises(ParseError):
            parse_model(src)

    def test_unknown_section(self):
        with pytest.raises(ParseError):
            parse_model("[systems]\ndim = 2\n")

    def test_matrix_literal(self):
        src = """
[system]
dim = 2
parameter = w, default = 1.0

[hamiltonian]
H = w * [[0, -1i], [1i, 0]]
"""
        spec = parse_model(src)
        op = spec.hamiltonian[0].op
        assert isinstance(op, MatrixLiteral)
        assert op.rows == ((0, -1j), (1j, 0))

    def test_signed_and_i_prefixes(self):
        src = """
[system]
dim = 2
parameter = w, default = 1.0

[hamiltonian]
H = Z - 0.5*X + w * -Z
"""
        spec = parse_model(src)
        assert len(spec.hamiltonian) == 3
        assert spec.hamiltonian[2].op.phase == -1

    def test_diagnostics_carry_positions(self):
        bad_sources = [
            "[system]\ndim = two\n",
            "[system]\ndim = 2\nparameter = omega\n\n[hamiltonian]\nH = 0.5*\n",
            "[system]\ndim = 2\nparameter = omega\n\n[hamiltonian]\nH = omega * Q2\n",
        ]
        for src in bad_sources:
            with pytest.raises(ParseError) as err:
                parse_model(src)
            assert err.value.line >= 1
            assert err.value.col >= 1
            assert err.value.expected


class TestPrettyRoundTrip:
    @pytest.mark.parametrize("src", [SPIN_FLIP_SRC, TWO_QUBIT_SRC, FIELD_ANGLE_SRC])
    def test_parse_print_parse(self, src):
        spec = parse_model(src)
        again = parse_model(pretty(spec))
        assert again == spec

    def test_shipped_models_round_trip(self):
        import importlib.resources as res
        for name in ("spin_flip.model", "field_angle.model"):
            text = (res.files("dqfi") / "models" / name).read_text()
            spec = parse_model(text)
            assert parse_model(pretty(spec)) == spec


class TestSymbolicDerivative:
    def test_matches_central_difference(self, rng):
        src_expr = "0.3*cos(2*theta) + sin(theta)*sqrt(theta + 2) - exp(0.1*theta)/(theta + 3)"
        spec = parse_model(f"""
[system]
dim = 2
parameter = theta, default = 0.5

[hamiltonian]
H = ({src_expr}) * Z
""")
        expr = spec.hamiltonian[0].coef
        deriv = diff_expr(expr)
        h = 1e-6
        for theta in rng.uniform(0.2, 3.0, size=10):
            fd = (eval_expr(expr, theta + h) - eval_expr(expr, theta - h)) / (2 * h)
            assert abs(eval_expr(deriv, theta) - fd) < 1e-8 * max(1.0, abs(fd))

    def test_simplification_keeps_constants_flat(self):
        assert diff_expr(Num(3.0)) == Num(0.0)
        assert diff_expr(Param("x")) == Num(1.0)
        d = diff_expr(Bin("*", Num(2.0), Param("x")))
        assert eval_expr(d, 1.23) == 2.0


class TestCompile:
    def test_spin_flip_matches_printed_supermatrix(self):
        spec = parse_model(SPIN_FLIP_SRC)
        model = compile_model(spec)
        got = build_liouvillian(model, 1.0).matrix
        ref = build_liouvillian(spin_flip_model(0.7), 1.0).matrix
        assert np.max(np.abs(got - ref)) < 1e-14

    def test_negative_rate_rejected(self):
        src = SPIN_FLIP_SRC.replace("rate = 0.7", "rate = -1")
        with pytest.raises(ModelError):
            compile_model(parse_model(src))

    def test_non_hermitian_rejected(self):
        src = """
[system]
dim = 2
parameter = w, default = 1.0

[hamiltonian]
H = w * [[0, 1], [0, 0]]
"""
        with pytest.raises(ModelError):
            compile_model(parse_model(src))

    def test_field_angle_analytic_derivative(self):
        spec = parse_model(FIELD_ANGLE_SRC)
        model = compile_model(spec)
        assert model.has_analytic_derivatives
        da = d_liouvillian(model, 0.3, mode="analytic")
        df = d_liouvillian(model, 0.3, mode="central-fd", h=1e-6)
        assert np.max(np.abs(da - df)) < 1e-8

    def test_rate_derivative_compiled(self):
        spec = parse_model(TWO_QUBIT_SRC)
        model = compile_model(spec)
        da = d_liouvillian(model, 0.5, mode="analytic")
        df = d_liouvillian(model, 0.5, mode="central-fd", h=1e-6)
        assert np.max(np.abs(da - df)) < 1e-8

    def test_two_qubit_dimensions(self):
        model = compile_model(parse_model(TWO_QUBIT_SRC))
        assert model.dim == 4
        assert build_liouvillian(model, 0.5).matrix.shape == (16, 16)

    def test_sweep_section(self):
        spec = parse_model(SPIN_FLIP_SRC + "\n[sweep]\nt0 = 0.0\nt1 = 5.0\nnt = 11\nvalues = 0.9, 1.1\n")
        assert spec.sweep.t1 == 5.0
        assert spec.sweep.values == (0.9, 1.1)
