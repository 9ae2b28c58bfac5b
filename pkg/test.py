import os
import sys

import pytest

current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.append(current_dir)
from pythonwfdrift import create_drift_system, solve_drift  # noqa: E402


class TestDriftSystem:

    def setup_method(self):
        self.drift_system = create_drift_system("central-whole", cells=100, tau=1e-3)

    def test_1_solve_drift_invalid_scheme(self):
        print("\n🔍 Testing unknown scheme name...")
        try:
            solve_drift(scheme="leapfrog")
            assert False, "Should have raised ValueError"
        except ValueError as e:
            print("✅ Correctly raised ValueError for unknown scheme")
            assert "central-whole" in str(e)

    def test_2_solve_drift_empty_scheme(self):
        print("\n🔍 Testing empty scheme name...")
        with pytest.raises(ValueError):
            solve_drift(scheme="")
        print("✅ Correctly raised ValueError for empty scheme")

    def test_3_solve_drift_invalid_mean(self):
        print("\n🔍 Testing initial mean outside (0, 1)...")
        for p in (0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                solve_drift(cells=50, tau=1e-2, t_end=0.1, p=p)
        print("✅ Correctly rejected p on or outside the boundary")

    def test_4_solve_drift_valid(self):
        print("\n🔍 Testing a coarse central-whole run to t = 6...")
        result = solve_drift(cells=100, tau=1e-2, t_end=6.0, p=0.4)

        assert isinstance(result, dict), "Result should be a dictionary"
        for key in ("w0", "w1", "P_0", "E_0", "report", "trajectory"):
            assert key in result, f"Result should contain '{key}' key"

        assert result["w0"] == pytest.approx(result["P_0"] - result["E_0"], abs=1e-4)
        assert result["w1"] == pytest.approx(result["E_0"], abs=1e-4)
        assert result["w0"] + result["w1"] <= result["P_0"] + 1e-10
        print(f"   w0={result['w0']:.8f}  w1={result['w1']:.8f}")

    def test_5_session_advance_before_load(self):
        print("\n🔍 Testing advance before initial state is loaded...")
        session = create_drift_system("upwind", cells=20, tau=1e-2)
        with pytest.raises(ValueError, match="load an initial state first"):
            session.advance(3)
        with pytest.raises(ValueError, match="load an initial state first"):
            session.report()
        print("✅ Correctly raised ValueError before load")

    def test_6_session_conserves_probability_and_expectation(self):
        print("\n🔍 Testing conservation across session steps...")
        assert self.drift_system.load_initial(p=0.3)
        assert self.drift_system.is_loaded

        self.drift_system.advance(50)
        report = self.drift_system.report()

        assert report["t"] == pytest.approx(0.05)
        assert report["P"] == pytest.approx(self.drift_system.P0, abs=1e-12)
        assert report["E"] == pytest.approx(self.drift_system.E0, abs=1e-12)
        print("✅ Probability and expectation conserved")

    def test_7_session_rejects_negative_steps(self):
        print("\n🔍 Testing negative step count...")
        self.drift_system.load_initial(p=0.5)
        with pytest.raises(ValueError):
            self.drift_system.advance(-1)

    def test_8_session_report_fields(self):
        print("\n🔍 Testing report contents...")
        self.drift_system.load_initial(p=0.5, renormalize=True)
        report = self.drift_system.report()
        for key in ("w0", "w1", "interior_mass", "deviation_w0", "left_mass", "t", "P", "E"):
            assert key in report, f"Report should contain '{key}'"
        assert report["P"] == pytest.approx(1.0, abs=1e-14)
        assert report["left_mass"] == pytest.approx(report["right_mass"], abs=1e-14)


def run_all_tests():
    print("🚀 Starting Drift System Tests...")
    print("=" * 50)

    test_suite = TestDriftSystem()
    test_methods = [method for method in dir(test_suite)
                    if method.startswith('test_') and callable(getattr(test_suite, method))]

    passed = 0
    failed = 0

    for method_name in test_methods:
        test_suite.setup_method()
        try:
            getattr(test_suite, method_name)()
            passed += 1
            print(f"✅ {method_name} - PASSED")
        except AssertionError as e:
            failed += 1
            print(f"❌ {method_name} - FAILED: {e}")
        except Exception as e:
            failed += 1
            print(f"💥 {method_name} - ERROR: {e}")
        print("-" * 40)

    print("=" * 50)
    print("📊 TEST SUMMARY:")
    print(f"   Total Tests: {len(test_methods)}")
    print(f"   ✅ Passed: {passed}")
    print(f"   ❌ Failed: {failed}")

    if failed == 0:
        print("🎉 All tests passed successfully!")
    else:
        print("⚠️ Some tests failed. Please check the implementation.")

    return failed == 0


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
