"""End-to-end checks of the ivtf command line against the JSON schemas."""

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

ARGS = None


def load_schema(name):
    with open(os.path.join(ARGS.schemas, name)) as fh:
        return json.load(fh)


def run(*argv, expect=0):
    proc = subprocess.run([ARGS.bin, *argv], capture_output=True, text=True, timeout=600)
    if proc.returncode != expect:
        raise AssertionError(f"{argv}: exit {proc.returncode}, stderr {proc.stderr!r}")
    return proc


class CliCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.output_schema = load_schema("cli-output.schema.json")
        cls.error_schema = load_schema("cli-error.schema.json")
        cls.audit_schema = load_schema("audit.schema.json")

    def json_result(self, *argv):
        proc = run("--format", "json", *argv)
        doc = json.loads(proc.stdout)
        jsonschema.validate(doc, self.output_schema)
        self.assertEqual(json.loads(json.dumps(doc)), doc)
        return doc["result"]

    def error(self, *argv, code, exit_code=1):
        proc = run(*argv, expect=exit_code)
        doc = json.loads(proc.stderr)
        jsonschema.validate(doc, self.error_schema)
        self.assertEqual(doc["error"]["code"], code)
        self.assertEqual(proc.stdout, "")
        return doc

    def test_cv(self):
        self.assertEqual(self.json_result("cv", "--f", "6.25")["sqrt_crit_table"], 4.92)
        self.assertEqual(self.json_result("cv", "--f", "49")["sqrt_crit_table"], 2.16)
        r = self.json_result("cv", "--f", "9")
        self.assertEqual(r["sqrt_crit_table"], 3.65)
        r = self.json_result("cv", "--f", "1.0")
        self.assertTrue(r["unbounded"])
        self.assertEqual(r["sqrt_crit"], "unbounded")
        r = self.json_result("cv", "--f", "500")
        self.assertAlmostEqual(r["sqrt_crit"], 1.96, places=3)
        self.error("cv", "--f", "-1", code="usage", exit_code=2)

    def test_test(self):
        self.assertEqual(self.json_result("test", "--t", "2.5", "--f", "120", "--procedure", "tf")["decision"], "reject")
        r = self.json_result("test", "--t", "2.0", "--f", "12", "--procedure", "threshold-2c")
        self.assertEqual(r["decision"], "accept")
        self.assertAlmostEqual(r["sqrt_crit"], 3.43, places=4)
        r = self.json_result("test", "--t", "2.0", "--f", "12", "--procedure", "threshold-2b")
        self.assertEqual(r["decision"], "accept")
        self.assertEqual(r["f_threshold"], 104.7)
        self.error("test", "--t", "2", "--f", "12", "--procedure", "threshold-2b", "--alpha", "0.01",
                   code="usage", exit_code=2)

    def test_ci(self):
        r = self.json_result("ci", "--beta", "3.2", "--se", "1.5", "--f", "9")
        self.assertGreaterEqual(r["adjusted_se"], 2.78)
        self.assertLessEqual(r["adjusted_se"], 2.80)
        r = self.json_result("ci", "--beta", "3.2", "--se", "1.5", "--f", "200")
        self.assertEqual(r["factor"], 1.0)
        self.assertEqual(r["lower"], r["conventional_lower"])
        self.assertEqual(r["upper"], r["conventional_upper"])
        r = self.json_result("ci", "--beta", "3.2", "--se", "1.5", "--f", "2")
        self.assertEqual(r["interval"], "(-inf, inf)")
        self.error("ci", "--beta", "1", "--se", "0", "--f", "9", code="usage", exit_code=2)

    def test_size(self):
        r = self.json_result("size", "--procedure", "conventional", "--rho", "1", "--f0", "0.05")
        self.assertAlmostEqual(r["prob"], 0.7536, places=4)
        r = self.json_result("size", "--procedure", "conventional", "--rho", "1", "--f0", "0.001")
        self.assertGreater(r["prob"], 0.95)
        r = self.json_result("size", "--procedure", "threshold-2b", "--rho", "0.5", "--f0", "5")
        self.assertLess(r["prob"], 1e-3)
        r = self.json_result("size", "--procedure", "ar", "--rho", "0.9", "--ef", "1")
        self.assertAlmostEqual(r["prob"], 0.05, places=4)
        r = self.json_result("size", "--procedure", "tf", "--f0", "3", "--sweep", "--points", "5")
        self.assertEqual(len(r["rows"]), 5)
        self.assertTrue(all(row["prob"] <= 0.0502 for row in r["rows"]))
        text = run("--format", "csv", "size", "--procedure", "conventional", "--f0", "2", "--sweep", "--points", "3")
        rows = list(csv.DictReader(io.StringIO(text.stdout)))
        self.assertEqual(len(rows), 3)
        self.assertEqual(float(rows[-1]["rho"]), 1.0)
        self.error("size", "--procedure", "ar", "--rho", "0.5", code="usage", exit_code=2)
        self.error("size", "--procedure", "ar", "--rho", "0.5", "--f0", "1", "--ef", "2", code="usage", exit_code=2)

    def test_solve(self):
        r = self.json_result("solve", "--mode", "threshold-F", "--crit", "3.8415", "--alpha", "0.05")
        self.assertAlmostEqual(r["value"], 104.7, delta=0.05)
        r = self.json_result("solve", "--mode", "critical-value", "--fbar", "10")
        self.assertAlmostEqual(r["sqrt_value"], 3.43, delta=0.005)
        r = self.json_result("solve", "--mode", "threshold-F", "--crit", "6.6564", "--alpha", "0.01")
        self.assertIsInstance(r["value"], float)
        r = self.json_result("solve", "--mode", "max-rho", "--crit", "6.6564", "--alpha", "0.01")
        self.assertAlmostEqual(r["value"], 0.43, delta=0.01)
        r = self.json_result("solve", "--mode", "min-EF", "--crit", "6.6564", "--alpha", "0.01")
        self.assertEqual(r["value"], "none")
        self.error("solve", "--mode", "threshold-F", code="usage", exit_code=2)

    def test_worst(self):
        r = self.json_result("worst", "--procedure", "threshold", "--crit", "3.8416", "--fbar", "10")
        self.assertAlmostEqual(r["max_prob"], 0.113, delta=0.001)
        self.assertEqual(r["arg_rho"], 1.0)

    def test_table3(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "table3.csv")
            r = self.json_result("table3", "--out", path)
            self.assertEqual(r["out"], path)
            with open(path) as fh:
                rows = list(csv.reader(fh))
        self.assertEqual(rows[0], ["sqrtF_int", "2", "3", "4", "5", "6", "7", "8", "9"])
        cell = {(row[0], h): row[i] for row in rows[1:] for i, h in enumerate(rows[0]) if i}
        self.assertEqual(cell[("0.5", "2")], "4.92")
        self.assertEqual(cell[("0.0", "3")], "3.65")
        self.assertEqual(cell[("0.0", "7")], "2.16")
        r = self.json_result("table3")
        self.assertEqual(r["rows"][5]["2"], 4.92)
        self.assertAlmostEqual(r["f_tilde"], 104.7, delta=0.1)
        self.assertEqual(run("table3").stdout, run("--format", "csv", "table3").stdout)

    def test_audit(self):
        fixture = os.path.join(ARGS.fixtures, "corpus_three.csv")
        first = run("audit", "--input", fixture).stdout
        self.assertEqual(first, run("audit", "--input", fixture).stdout)
        doc = json.loads(first)
        jsonschema.validate(doc, self.audit_schema)
        decisions = {r["spec_id"]: r["decisions"] for r in doc["records"]}
        self.assertEqual(decisions["a"], {"conventional": "reject", "threshold-2b": "reject",
                                          "threshold-2c": "accept", "tf": "reject"})
        self.assertEqual(set(decisions["b"].values()), {"accept"})
        self.assertEqual(decisions["c"], {"conventional": "reject", "threshold-2b": "accept",
                                          "threshold-2c": "reject", "tf": "reject"})
        self.assertEqual(doc["procedures"]["threshold-2b"]["reclassification"]["count"], 1)
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, "audit.json")
            self.json_result("audit", "--input", fixture, "--out", out)
            with open(out) as fh:
                self.assertEqual(fh.read(), first)
            bad = os.path.join(tmp, "bad.csv")
            with open(bad, "w") as fh:
                fh.write("spec_id,paper_id,t,F_derived,F_reported,weight\na,p,oops,3,,\n")
            err = self.error("audit", "--input", bad, code="schema")
            self.assertIn("line 2", err["error"]["message"])
            self.error("audit", "--input", os.path.join(tmp, "missing.csv"), code="io")

    def test_mc(self):
        a = self.json_result("mc", "--procedure", "ar", "--n", "100000", "--seed", "7")
        b = self.json_result("mc", "--procedure", "ar", "--n", "100000", "--seed", "7")
        self.assertEqual(a, b)
        self.assertLessEqual(abs(a["estimate"] - 0.05), 3 * a["mc_se"])
        self.error("mc", "--procedure", "ar", "--n", "10", code="domain")

    def test_plain_and_unknown(self):
        text = run("cv", "--f", "6.25").stdout
        self.assertIn("sqrt_crit_table: 4.92", text)
        self.error("bogus", code="usage", exit_code=2)
        self.error("--format", "xml", "cv", "--f", "9", code="usage", exit_code=2)


def main():
    global ARGS
    parser = argparse.ArgumentParser()
    parser.add_argument("--bin", required=True)
    parser.add_argument("--schemas", required=True)
    parser.add_argument("--fixtures", required=True)
    ARGS, rest = parser.parse_known_args()
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)


if __name__ == "__main__":
    main()
