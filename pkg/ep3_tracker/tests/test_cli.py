import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr
from unittest import mock

import jsonschema

import ep3_tracker
from ep3_tracker.cli import build_parser, parse_pair, run
from ep3_tracker.settings import reset_settings
from ep3_tracker.utils import sha256_digest

SCHEMAS = os.path.join(os.path.dirname(ep3_tracker.__file__), 'schemas')


def load_schema(name):
    with open(os.path.join(SCHEMAS, name + '.schema.json')) as fh:
        return json.load(fh)


class SchemaAssertions:

    def assertConforms(self, data, schema):
        try:
            jsonschema.validate(instance=data, schema=load_schema(schema))
        except jsonschema.ValidationError as e:
            self.fail('%s does not match %s.schema.json: %s' % (json.dumps(data)[:200], schema, e.message))


class CliTestCase(SchemaAssertions, unittest.TestCase):

    def setUp(self):
        self.out = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.out, ignore_errors=True)

    def invoke(self, *argv, out=None):
        stdout = io.StringIO()
        with redirect_stderr(io.StringIO()):
            status = run(list(argv) + ['--out', out or self.out], stdout=stdout)
        text = stdout.getvalue()
        return status, json.loads(text) if text else None

    def read_json(self, name, out=None):
        with open(os.path.join(out or self.out, name)) as fh:
            return json.load(fh)

    def read_bytes(self, name, out=None):
        with open(os.path.join(out or self.out, name), 'rb') as fh:
            return fh.read()

    def assertWritten(self, summary, name, schema):
        self.assertConforms(summary, schema)
        self.assertEqual(self.read_json(name), summary)
        self.assertConforms(self.read_json('manifest.json'), 'manifest')


class SchemaTest(unittest.TestCase):

    def test_every_schema_is_valid(self):
        for name in sorted(os.listdir(SCHEMAS)):
            with self.subTest(schema=name):
                jsonschema.Draft202012Validator.check_schema(load_schema(name[:-len('.schema.json')]))

    def test_malformed_summary_is_rejected(self):
        malformed = {'contour': {}, 'monodromy': 'x', 'events': 5, 'ambiguous_steps': -3}
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(instance=malformed, schema=load_schema('encircle_summary'))

    def test_malformed_error_and_manifest_are_rejected(self):
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(instance={'error': 'DomainError', 'message': 'm', 'subcommand': 'plot'},
                                schema=load_schema('error'))
        manifest = {'tool_version': '0.1.0', 'subcommand': 'locate', 'flags': {},
                    'config': {'eps': [], 'tau': [], 'gamma': 0.95, 'kappa': 0.3, 'policy': {}},
                    'outputs': [{'path': 'candidates.json', 'sha256': 'abc', 'bytes': 1}],
                    'duration_seconds': 0.1}
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(instance=manifest, schema=load_schema('manifest'))


class ParserTest(unittest.TestCase):

    def test_parse_pair(self):
        self.assertEqual(parse_pair('3,2'), (2, 3))
        for text in ('1', '2,2', '0,1', '1,4', 'a,b'):
            with self.assertRaises(Exception):
                parse_pair(text)

    def test_defaults(self):
        args = build_parser().parse_args(['encircle'])
        self.assertEqual((args.x0, args.y0, args.a, args.b), (0.6, 0.25, 2.5, 1.0))
        self.assertEqual(args.steps, 4096)
        self.assertEqual(args.out, 'ep3-output')


class ExitStatusTest(CliTestCase):

    def test_usage_errors(self):
        with redirect_stderr(io.StringIO()):
            self.assertEqual(run([]), 2)
            self.assertEqual(run(['encircle', '--steps', 'many']), 2)
            self.assertEqual(run(['arc']), 2)
            self.assertEqual(run(['arc', '--delta', '0.2', '--pair', '2,2']), 2)

    def test_domain_error_is_reported(self):
        status, data = self.invoke('encircle', '--steps', '10')
        self.assertEqual(status, 1)
        self.assertConforms(data, 'error')
        self.assertEqual(data['error'], 'DomainError')
        self.assertEqual(data['subcommand'], 'encircle')
        self.assertFalse(os.path.exists(os.path.join(self.out, 'manifest.json')))

    def test_missing_config(self):
        status, data = self.invoke('locate', '--config', os.path.join(self.out, 'absent.toml'))
        self.assertEqual(status, 1)
        self.assertConforms(data, 'error')
        self.assertEqual(data['error'], 'ConfigurationError')


class EncircleCommandTest(CliTestCase):

    def test_outputs(self):
        status, summary = self.invoke('encircle', '--steps', '1024')
        self.assertEqual(status, 0)
        self.assertConforms(summary, 'encircle_summary')
        self.assertEqual(summary['monodromy']['permutation'], [3, 1, 2])
        self.assertEqual(summary['monodromy']['cycles'], '(1 3 2)')
        self.assertEqual([e['pair'] for e in summary['events']], [[1, 2], [2, 3]])
        self.assertWritten(summary, 'encircle_summary.json', 'encircle_summary')

        manifest = self.read_json('manifest.json')
        self.assertConforms(manifest, 'manifest')
        self.assertEqual(manifest['subcommand'], 'encircle')
        self.assertEqual(manifest['flags']['steps'], 1024)
        self.assertEqual(manifest['config']['gamma'], 0.95)
        self.assertEqual([o['path'] for o in manifest['outputs']], ['encircle_summary.json', 'trajectory.csv'])
        for output in manifest['outputs']:
            self.assertEqual(output['sha256'], sha256_digest(self.read_bytes(output['path'])))

        lines = self.read_bytes('trajectory.csv').decode().splitlines()
        self.assertEqual(len(lines), 1 + 1025)
        self.assertTrue(lines[0].startswith('theta,theta_over_pi,delta,lambda_re,lambda_im,E1_re'))

    def test_deterministic(self):
        other = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, other, True)
        self.invoke('encircle', '--steps', '512', '--x0', '0.5', '--y0', '0.27', '--a', '1')
        self.invoke('encircle', '--steps', '512', '--x0', '0.5', '--y0', '0.27', '--a', '1', out=other)
        for name in ('trajectory.csv', 'encircle_summary.json'):
            self.assertEqual(self.read_bytes(name), self.read_bytes(name, other))

    def test_clockwise(self):
        status, summary = self.invoke('encircle', '--steps', '1024', '--clockwise')
        self.assertEqual(status, 0)
        self.assertWritten(summary, 'encircle_summary.json', 'encircle_summary')
        self.assertEqual(summary['contour']['direction'], 'clockwise')

    def test_starting_angle(self):
        status, summary = self.invoke('encircle', '--steps', '1024', '--theta0', '2.2')
        self.assertEqual(status, 0)
        self.assertWritten(summary, 'encircle_summary.json', 'encircle_summary')
        self.assertEqual(summary['contour']['theta0'], 2.2)
        self.assertEqual(summary['monodromy']['permutation'], [3, 1, 2])
        first = self.read_bytes('trajectory.csv').decode().splitlines()[1]
        self.assertAlmostEqual(float(first.split(',')[0]), 2.2)
        self.assertEqual(summary['monodromy']['permutation'], [2, 3, 1])


class PhaseCommandTest(CliTestCase):

    def test_from_trajectory_file(self):
        self.invoke('encircle', '--steps', '1024')
        status, from_file = self.invoke('phase', '--steps', '1024',
                                        '--trajectory', os.path.join(self.out, 'trajectory.csv'))
        self.assertEqual(status, 0)
        self.assertWritten(from_file, 'phase_summary.json', 'phase_summary')
        self.assertEqual(from_file['contour']['theta0'], 0.0)
        status, direct = self.invoke('phase', '--steps', '1024')
        self.assertEqual(status, 0)
        self.assertWritten(direct, 'phase_summary.json', 'phase_summary')

        self.assertEqual(from_file['monodromy']['permutation'], [3, 1, 2])
        self.assertEqual(from_file['monodromy']['permutation'], direct['monodromy']['permutation'])
        self.assertEqual([s['pair'] for s in from_file['switches']], [s['pair'] for s in direct['switches']])
        for a, b in zip(from_file['closure']['single_loop_defects'], direct['closure']['single_loop_defects']):
            self.assertAlmostEqual(a, b, places=6)
        self.assertIsNone(direct['closure']['cycle_spread'])

        header = self.read_bytes('phase.csv').decode().splitlines()[0]
        self.assertEqual(header.split(',')[:4], ['theta', 'theta_over_pi', 'phi_branch_1', 'phi_branch_2'])

    def test_unreadable_trajectory(self):
        status, data = self.invoke('phase', '--trajectory', os.path.join(self.out, 'missing.csv'))
        self.assertEqual(status, 1)
        self.assertEqual(data['error'], 'ConfigurationError')


class ArcCommandTest(CliTestCase):

    def test_single_pair(self):
        status, summary = self.invoke('arc', '--delta', '0.21', '--delta', '0.23', '--pair', '3,2')
        self.assertEqual(status, 0)
        self.assertWritten(summary, 'arc_summary.json', 'arc_summary')
        kinds = [sweep['classes'][0]['kind'] for sweep in summary['sweeps']]
        self.assertEqual(kinds, ['ReAnti_ImCross', 'ReCross_ImAnti'])
        self.assertTrue(os.path.exists(os.path.join(self.out, 'arc_delta_0.21.csv')))
        self.assertTrue(os.path.exists(os.path.join(self.out, 'arc_delta_0.23.csv')))

    def test_all_pairs(self):
        status, summary = self.invoke('arc', '--delta', '0.21')
        self.assertEqual(status, 0)
        self.assertWritten(summary, 'arc_summary.json', 'arc_summary')
        self.assertEqual([c['pair'] for c in summary['sweeps'][0]['classes']], [[1, 2], [2, 3], [1, 3]])


class LocateCommandTest(CliTestCase):

    def test_small_box(self):
        status, summary = self.invoke('locate', '--delta-min', '0.1', '--delta-max', '0.4',
                                      '--lambda-min', '0.3', '--lambda-max', '0.6')
        self.assertEqual(status, 0)
        self.assertWritten(summary, 'candidates.json', 'candidates')
        self.assertEqual(len(summary['candidates']), 1)
        candidate = summary['candidates'][0]
        self.assertAlmostEqual(candidate['delta'], 0.224551, places=5)
        self.assertAlmostEqual(candidate['lambda_re'], 0.486077, places=5)
        self.assertEqual(candidate['pair'], [2, 3])
        self.assertTrue(candidate['refined'])


class ReproduceCommandTest(SchemaAssertions, unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.out = tempfile.mkdtemp()
        stdout = io.StringIO()
        with redirect_stderr(io.StringIO()):
            cls.status = run(['reproduce', '--out', cls.out], stdout=stdout)
        cls.summary = json.loads(stdout.getvalue())

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.out, ignore_errors=True)

    def test_files(self):
        self.assertEqual(self.status, 0)
        for name in ('fig1.csv', 'fig2.csv', 'fig3.csv', 'fig4.csv', 'fig5.csv', 'fig6.csv', 'fig7.csv',
                     'summary.json', 'manifest.json'):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)), name)

    def test_written_documents(self):
        with open(os.path.join(self.out, 'summary.json')) as fh:
            self.assertEqual(json.load(fh), self.summary)
        with open(os.path.join(self.out, 'manifest.json')) as fh:
            self.assertConforms(json.load(fh), 'manifest')

    def test_rerun_is_byte_identical(self):
        rerun = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, rerun, True)
        self.addCleanup(reset_settings)
        with mock.patch.dict(os.environ, {'EP3_TRACKER_THREADS': '4'}), redirect_stderr(io.StringIO()):
            reset_settings()
            status = run(['reproduce', '--out', rerun], stdout=io.StringIO())
        self.assertEqual(status, 0)

        outputs = []
        for out in (self.out, rerun):
            with open(os.path.join(out, 'manifest.json')) as fh:
                outputs.append(json.load(fh)['outputs'])
        self.assertEqual(outputs[0], outputs[1])
        for output in outputs[0]:
            with self.subTest(path=output['path']):
                with open(os.path.join(self.out, output['path']), 'rb') as a, \
                        open(os.path.join(rerun, output['path']), 'rb') as b:
                    self.assertEqual(a.read(), b.read())

    def test_summary(self):
        summary = self.summary
        self.assertConforms(summary, 'summary')
        self.assertEqual(len(summary['eps']), 2)
        self.assertEqual([c['kind'] for c in summary['fig1']['classes']], ['ReAnti_ImCross', 'ReCross_ImAnti'])
        fig4 = {entry['contour']: entry for entry in summary['fig4']}
        self.assertEqual(fig4['black']['monodromy']['permutation'], [1, 3, 2])
        self.assertEqual(fig4['black']['encloses'], [True, False])
        self.assertEqual(fig4['black_nominal']['monodromy']['permutation'], [1, 2, 3])
        self.assertEqual(fig4['violet']['monodromy']['permutation'], [2, 1, 3])
        self.assertEqual(fig4['violet']['squared']['permutation'], [1, 2, 3])
        self.assertEqual(summary['fig5']['monodromy']['permutation'], [3, 1, 2])
        self.assertEqual(summary['fig5']['encloses'], [True, True])
        self.assertEqual(summary['fig6']['flips'], [[3, 1, 2], [2, 3, 1], [1, 2, 3]])
        self.assertEqual(summary['fig7']['closure']['order'], 3)
        self.assertLess(summary['fig7']['closure']['cycle_spread'], 0.01)

    def test_flip_table_file(self):
        with open(os.path.join(self.out, 'fig6.csv')) as fh:
            lines = fh.read().splitlines()
        self.assertEqual(lines[0], 'loop,branch,start_position')
        self.assertEqual(lines[1:4], ['1,1,3', '1,2,1', '1,3,2'])


if __name__ == '__main__':
    unittest.main()
