import sys
import unittest
from unittest import TestSuite

default_labels = ("ep3_tracker.tests",)


def get_suite(labels=default_labels):
    loader = unittest.TestLoader()
    suite = TestSuite()
    for label in labels:
        if label.endswith(".tests"):
            suite.addTests(loader.discover(label.replace(".", "/"), top_level_dir="."))
        else:
            suite.addTests(loader.loadTestsFromName(label))

    result = unittest.TextTestRunner(verbosity=1).run(suite)
    failures = len(result.failures) + len(result.errors)
    if failures:
        sys.exit(failures)

    # in case this is called from setup tools, return a test suite
    return TestSuite()


if __name__ == "__main__":
    labels = default_labels
    if len(sys.argv[1:]) > 0:
        labels = sys.argv[1:]

    get_suite(labels)
