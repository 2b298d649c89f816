#!/usr/bin/env python3
"""
Test Runner for the Generator Engine Unit Tests
Run this script to verify the plant model, estimator, controller and experiment engine
"""

import sys
import unittest
from pathlib import Path

PROJECT_ROOT = Path(__file__).parent
sys.path.append(str(PROJECT_ROOT))

from tests.test_machine import (
    TestInductanceMatrix, TestCurrentsTorqueVoltage, TestStateDerivative, TestRungeKutta,
    TestSteadyState, TestUnstableCoupling,
)
from tests.test_sysid import TestArxModel, TestRlsUpdate, TestIdentification, TestStabilityCheck
from tests.test_control import TestMvControl, TestMinimumVariance, TestMvController, TestDither
from tests.test_metrics import TestComputeMetrics
from tests.test_config import TestMachineFiles, TestScenarioFiles, TestScenarioValidation

FAST_CLASSES = [
    TestInductanceMatrix,
    TestCurrentsTorqueVoltage,
    TestStateDerivative,
    TestRungeKutta,
    TestSteadyState,
    TestUnstableCoupling,
    TestArxModel,
    TestRlsUpdate,
    TestIdentification,
    TestStabilityCheck,
    TestMvControl,
    TestMinimumVariance,
    TestMvController,
    TestDither,
    TestComputeMetrics,
    TestMachineFiles,
    TestScenarioFiles,
    TestScenarioValidation,
]


def run_tests(include_slow: bool = False):
    """Run the engine unit tests; ``--all`` adds the loop and command-line suites"""
    print("=" * 80)
    print("🧪 GENERATOR ENGINE UNIT TESTS")
    print("=" * 80)
    print("Testing the dq0 plant, recursive least squares and the minimum-variance law")
    if include_slow:
        print("Including closed-loop, sweep and command-line integration tests")
    print("=" * 80)

    loader = unittest.TestLoader()
    test_suite = unittest.TestSuite()
    for test_class in FAST_CLASSES:
        test_suite.addTests(loader.loadTestsFromTestCase(test_class))
    if include_slow:
        test_suite.addTests(loader.loadTestsFromNames(["tests.test_loop", "tests.test_cli"]))

    runner = unittest.TextTestRunner(verbosity=2, buffer=True)
    result = runner.run(test_suite)

    print("=" * 80)
    print("📊 TEST SUMMARY")
    print("=" * 80)
    print(f"Tests Run: {result.testsRun}")
    print(f"✅ Successes: {result.testsRun - len(result.failures) - len(result.errors)}")
    print(f"❌ Failures: {len(result.failures)}")
    print(f"🚨 Errors: {len(result.errors)}")

    if result.failures:
        print("\n❌ FAILURES:")
        for test, traceback in result.failures:
            print(f"  • {test}: {traceback.splitlines()[-1]}")

    if result.errors:
        print("\n🚨 ERRORS:")
        for test, traceback in result.errors:
            print(f"  • {test}: {traceback.splitlines()[-1]}")

    if result.testsRun:
        success_rate = ((result.testsRun - len(result.failures) - len(result.errors)) / result.testsRun) * 100
        print(f"\nSuccess Rate: {success_rate:.1f}%")

    if result.wasSuccessful():
        print("🎉 All tests passed! The engine behaves as expected.")
        return True
    print("⚠️ Some tests failed. Please review the engine.")
    return False


if __name__ == "__main__":
    success = run_tests(include_slow="--all" in sys.argv[1:])
    sys.exit(0 if success else 1)
