import io
import os
import shutil
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import unittest
from fractions import Fraction
from unittest.mock import patch

from thetak.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, build_parser, main
from thetak.dist_calc import DeltaTerm, Distribution
from thetak.formats.dist_format import load_distributions


class TestCli(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.cwd = os.getcwd()
        os.chdir(self.test_dir)

    def tearDown(self):
        os.chdir(self.cwd)
        shutil.rmtree(self.test_dir)

    def run_cli(self, *argv):
        with patch('sys.stdout', new=io.StringIO()) as fake_out, patch('sys.stderr', new=io.StringIO()) as fake_err:
            code = main(list(argv))
        return code, fake_out.getvalue(), fake_err.getvalue()

    def test_verify_complex_line(self):
        code, out, _ = self.run_cli("verify", "--model", "complex-line(2,0)", "--order", "3")
        self.assertEqual(code, EXIT_PASS, out)
        self.assertIn("target 4.5", out)
        self.assertIn("PASS", out)

    def test_verify_integer_lattice(self):
        code, out, _ = self.run_cli("verify", "--model", "t-star-s1")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("converged exactly", out)

    def test_verify_rg(self):
        code, out, _ = self.run_cli("verify", "--model", "su2-flag-square", "--rg")
        self.assertEqual(code, EXIT_PASS, out)

    def test_unknown_model(self):
        code, _, err = self.run_cli("verify", "--model", "foo")
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("Error", err)

    def test_bad_ladder(self):
        code, _, _ = self.run_cli("verify", "--kladder", "8..4")
        self.assertEqual(code, EXIT_USAGE)

    def test_outputs(self):
        code, _, _ = self.run_cli("verify", "--model", "complex-line(2,1)", "--order", "1", "--out", "run")
        self.assertEqual(code, EXIT_PASS)
        with open(os.path.join("run", "summary.toml"), "rb") as f:
            summary = tomllib.load(f)
        self.assertTrue(summary["verify"]["passed"])
        self.assertEqual(summary["verify"]["order"], 1)
        with open(os.path.join("run", "verify.csv")) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "k,exact,truncated,abs_err")
        self.assertEqual([line.split(",")[0] for line in lines[1:]], ["8", "16", "32", "64"])

    def test_outputs_are_reproducible(self):
        for out in ("first", "second"):
            code, _, _ = self.run_cli("verify", "--model", "complex-line(2,1)", "--order", "1", "--out", out)
            self.assertEqual(code, EXIT_PASS)
        names = sorted(os.listdir("first"))
        self.assertEqual(names, ["expansion.toml", "summary.toml", "verify.csv"])
        self.assertEqual(sorted(os.listdir("second")), names)
        for name in names:
            with open(os.path.join("first", name), "rb") as a, open(os.path.join("second", name), "rb") as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_expansion_document(self):
        code, _, _ = self.run_cli("verify", "--model", "complex-line(2,1)", "--order", "1", "--out", "run")
        self.assertEqual(code, EXIT_PASS)
        entries = load_distributions(os.path.join("run", "expansion.toml"))
        names = [e.name for e in entries]
        self.assertEqual((names[0], names[-1]), ("theta_0 residue 0", "Theta_64"))
        self.assertIn("theta_2 residue 0", names)
        self.assertEqual(entries[0].power, 1)
        self.assertEqual(entries[0].distribution, Distribution.half_line(1, Fraction(1, 2)))
        self.assertIsNone(entries[-1].power)
        self.assertTrue(all(isinstance(t, DeltaTerm) for t in entries[-1].distribution.terms))

    def test_tolerance_must_be_positive(self):
        for tol in ("-1", "0"):
            with self.subTest(tol=tol):
                code, _, err = self.run_cli("verify", "--tol", tol)
                self.assertEqual(code, EXIT_USAGE)
                self.assertIn("tol", err)

    def test_config_file(self):
        with open("run.toml", "w") as f:
            f.write('model = "complex-line(2,0)"\norder = 1\nkladder = [4, 8, 16, 32]\n')
        code, out, _ = self.run_cli("verify", "--config", "run.toml")
        self.assertEqual(code, EXIT_PASS, out)
        with open("bad.toml", "w") as f:
            f.write("kmax = 0\n")
        code, _, _ = self.run_cli("functoriality", "--config", "bad.toml")
        self.assertEqual(code, EXIT_USAGE)

    def test_functoriality_restriction(self):
        code, out, _ = self.run_cli("functoriality", "restriction", "--model", "su2-flag-square", "--kmax", "10")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("holds", out)

    def test_functoriality_detects_defect(self):
        code, out, _ = self.run_cli("functoriality", "restriction", "--kmax", "4", "--inject-defect", "μ=3,k=2")
        self.assertEqual(code, EXIT_FAIL)
        self.assertIn("fails at mu=-2, k=2", out)

    def test_functoriality_all(self):
        code, _, _ = self.run_cli("functoriality", "--kmax", "6", "--lam-max", "4", "--out", "f")
        self.assertEqual(code, EXIT_PASS)
        with open(os.path.join("f", "summary.toml"), "rb") as f:
            summary = tomllib.load(f)
        self.assertEqual(set(summary) - {"schema_version"}, {"restriction", "mystery", "pushforward", "finite-k"})

    def test_mystery(self):
        code, out, _ = self.run_cli("functoriality", "mystery", "--k", "100")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("(10000, 10000)", out)

    def test_mystery_noncompact(self):
        code, _, _ = self.run_cli("functoriality", "mystery", "--model", "complex-line(2,0)", "--k", "3")
        self.assertEqual(code, EXIT_USAGE)

    def test_em_fulllattice(self):
        code, out, _ = self.run_cli("em", "fulllattice", "--order", "3")
        self.assertEqual(code, EXIT_PASS, out)
        self.assertIn("-1/12", out)
        self.assertIn("1/720", out)

    def test_em_halfline(self):
        code, out, _ = self.run_cli("em", "halfline", "--model", "complex-line(2,1)", "--order", "2")
        self.assertEqual(code, EXIT_PASS, out)
        self.assertIn("1/12", out)

    def test_kirillov(self):
        code, out, _ = self.run_cli("kirillov", "--lam-max", "5")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("kirillov", out)

    def test_twisted_integer_lattice(self):
        code, out, _ = self.run_cli("twisted", "--model", "t-star-s1", "--zeta", "1/2", "--k", "64")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("k=64", out)

    def test_twisted_half_line(self):
        code, out, _ = self.run_cli("twisted", "--model", "complex-line(2,0)", "--zeta", "1/4", "--order", "3")
        self.assertEqual(code, EXIT_PASS, out)

    def test_models(self):
        code, out, _ = self.run_cli("models")
        self.assertEqual(code, EXIT_PASS)
        for name in ("t-star-s1", "complex-line", "complex-space", "su2-orbit", "su2-flag-square", "custom"):
            self.assertIn(name, out)

    def test_no_command(self):
        code, _, _ = self.run_cli()
        self.assertEqual(code, EXIT_USAGE)

    def test_parser_rejects_unknown_check(self):
        with patch('sys.stderr', new=io.StringIO()):
            with self.assertRaises(SystemExit):
                build_parser().parse_args(["functoriality", "nonsense"])


if __name__ == "__main__":
    unittest.main()
