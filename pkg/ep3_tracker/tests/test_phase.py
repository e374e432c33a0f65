import math
import unittest
from dataclasses import replace

import numpy as np
from numpy.testing import assert_allclose

from ep3_tracker.encircle import Contour, MonodromyResult, track_loop
from ep3_tracker.exceptions import StaleTrajectoryError
from ep3_tracker.model import SystemConfig
from ep3_tracker.phase import (accumulate_phase, closure_report, detect_phase_switch, gauge_fix,
                               transported_phase)
from ep3_tracker.solver import canonical_gauge
from ep3_tracker.utils import wrap_phase

CFG = SystemConfig.default()

DOUBLE = Contour(0.6, 0.25, 2.5, 1.0)
BLACK = Contour(0.5, 0.27, 1.0, 1.0)
VIOLET = Contour(1.25, 0.25, 0.5, 1.0)
TINY = Contour(0.7, 0.08, 0.1, 0.1, steps=512)


def random_vectors(rng, n):
    vectors = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    return vectors / np.linalg.norm(vectors, axis=1)[:, None]


class GaugeFixTest(unittest.TestCase):

    def test_overlaps_real_positive(self):
        rng = np.random.default_rng(7)
        fixed = gauge_fix(random_vectors(rng, 20))
        for k in range(1, len(fixed)):
            overlap = np.vdot(fixed[k - 1], fixed[k])
            self.assertAlmostEqual(overlap.imag, 0.0)
            self.assertGreater(overlap.real, 0.0)

    def test_first_vector_untouched(self):
        rng = np.random.default_rng(8)
        vectors = random_vectors(rng, 5)
        assert_allclose(gauge_fix(vectors)[0], vectors[0])

    def test_orthogonal_neighbours(self):
        with self.assertRaises(StaleTrajectoryError):
            gauge_fix(np.array([[1, 0, 0], [0, 1, 0]], dtype=complex))

    def test_transported_phase_ignores_input_gauge(self):
        rng = np.random.default_rng(9)
        vectors = random_vectors(rng, 4)
        # small perturbations keep neighbours far from orthogonal
        path = np.array([vectors[0] + 0.1 * k * vectors[1] for k in range(30)])
        path /= np.linalg.norm(path, axis=1)[:, None]
        rephased = path * np.exp(1j * rng.uniform(-math.pi, math.pi, size=len(path)))[:, None]
        assert_allclose(transported_phase(rephased), transported_phase(path), atol=1e-12)
        self.assertEqual(transported_phase(path)[0], 0.0)


class AccumulatePhaseTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.trajectory, _ = track_loop(CFG, replace(DOUBLE, loops=3))
        cls.series = accumulate_phase(cls.trajectory)

    def test_starts_at_zero(self):
        assert_allclose(self.series.branch_phase[0], [0.0, 0.0, 0.0])

    def test_increments_are_overlap_angles(self):
        vectors = self.trajectory.vectors
        for k in (0, 511, 1879, 4095, 9000):
            for b in range(3):
                overlap = np.vdot(canonical_gauge(vectors[k, b]), canonical_gauge(vectors[k + 1, b]))
                increment = self.series.branch_phase[k + 1, b] - self.series.branch_phase[k, b]
                self.assertAlmostEqual(wrap_phase(increment - np.angle(overlap)), 0.0, places=9)

    def test_single_loop_phases(self):
        assert_allclose(self.series.closure(1) / math.pi, [-1.01632, -0.17611, 1.66949], atol=2e-3)

    def test_three_loop_phases_coincide(self):
        assert_allclose(self.series.closure(3) / math.pi, [0.47706] * 3, atol=2e-3)

    def test_closure_report(self):
        report = closure_report(self.series, MonodromyResult((3, 1, 2)))
        self.assertFalse(report.restored)
        assert_allclose(np.array(report.single_loop_defects) / math.pi, [0.98368, -0.17611, -0.33051], atol=2e-3)
        self.assertEqual(report.order, 3)
        assert_allclose(np.array(report.order_loop_phases) / math.pi, [0.47706] * 3, atol=2e-3)
        self.assertFalse(report.quantized)
        self.assertLess(report.cycle_spread, 0.01)
        self.assertEqual(report.as_dict()['order'], 3)

    def test_short_series_has_no_cycle_spread(self):
        trajectory, _ = track_loop(CFG, replace(DOUBLE, steps=1024))
        report = closure_report(accumulate_phase(trajectory), MonodromyResult((3, 1, 2)))
        self.assertIsNone(report.cycle_spread)
        self.assertEqual(report.order_loop_phases, ())
        self.assertIsNone(report.as_dict()['order_loop_phases'])

    def test_order_phase_follows_sorted_real_parts(self):
        series = self.series
        for k in (0, 1000, 2000, 3000):
            reals = series.values[k, series.order_branches[k] - 1].real
            self.assertTrue(np.all(np.diff(reals) <= 0))
            assert_allclose(series.order_phase[k], series.branch_phase[k, series.order_branches[k] - 1])


class FrozenContourTest(unittest.TestCase):

    def test_no_motion_no_phase(self):
        trajectory, monodromy = track_loop(CFG, Contour(0.6, 0.25, 0.0, 0.0, steps=64))
        series = accumulate_phase(trajectory)
        self.assertTrue(monodromy.is_identity)
        assert_allclose(series.branch_phase, 0.0, atol=1e-12)


class SmallLoopTest(unittest.TestCase):

    def test_restored_without_enclosed_ep(self):
        trajectory, monodromy = track_loop(CFG, TINY)
        series = accumulate_phase(trajectory)
        report = closure_report(series, monodromy)
        self.assertTrue(report.restored)
        self.assertTrue(report.quantized)
        self.assertEqual(detect_phase_switch(series, trajectory.events), [])


class PhaseSwitchTest(unittest.TestCase):

    def switches(self, contour):
        trajectory, _ = track_loop(CFG, contour)
        return detect_phase_switch(accumulate_phase(trajectory), trajectory.events)

    def test_double_ep_switches(self):
        switches = self.switches(DOUBLE)
        self.assertEqual([s.pair for s in switches], [(1, 2), (2, 3)])
        assert_allclose([s.theta / math.pi for s in switches], [0.4566, 0.5801], atol=2e-3)
        for switch in switches:
            self.assertLess(abs(switch.theta - switch.event_theta), 0.02 * math.pi)

    def test_black_switch(self):
        switches = self.switches(BLACK)
        self.assertEqual([s.pair for s in switches], [(2, 3)])
        self.assertAlmostEqual(switches[0].theta / math.pi, 0.6833, delta=2e-3)

    def test_violet_switch(self):
        switches = self.switches(VIOLET)
        self.assertEqual([s.pair for s in switches], [(1, 2)])
        self.assertAlmostEqual(switches[0].theta / math.pi, 0.7271, delta=2e-3)
        self.assertAlmostEqual(switches[0].event_theta / math.pi, 0.7271, delta=2e-3)
        self.assertLess(abs(switches[0].theta - switches[0].event_theta), 0.02 * math.pi)

    def test_empty_window(self):
        trajectory, _ = track_loop(CFG, DOUBLE)
        self.assertEqual(detect_phase_switch(accumulate_phase(trajectory), trajectory.events, window=0.0), [])


if __name__ == '__main__':
    unittest.main()
