"""Tests for the slu command line."""

import json
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from slu.cli import cli
from slu.data import read_jsonl
from slu.engine import load_checkpoint
from slu.evaluation import decode_chunks
from slu.training import COMPARE_COLUMNS, SWEEP_COLUMNS

TINY_RUN = {
    'variant': 'memnet',
    'dli': True,
    'lambda': 0.3,
    'batch_size': 4,
    'max_epochs': 2,
    'early_stop_patience': None,
    'embedding_dim': 4,
    'hidden_dim': 3,
}


@pytest.fixture(autouse=True)
def _no_data_dir_env(monkeypatch):
    monkeypatch.delenv('SLU_DATA_DIR', raising=False)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def prepared(runner, raw_kvret_dir, tmp_path):
    out = tmp_path / 'prepared'
    result = runner.invoke(cli, ['prepare', str(raw_kvret_dir), '--out-dir', str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(TINY_RUN), encoding='utf-8')
    return path


@pytest.fixture
def trained(runner, prepared, run_config, tmp_path):
    out = tmp_path / 'run'
    result = runner.invoke(cli, ['train', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--output-dir', str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_prepare_writes_splits_and_reports(prepared):
    for name in ('train.jsonl', 'dev.jsonl', 'test.jsonl', 'vocab.json', 'stats.json', 'skip_report.txt'):
        assert (prepared / name).exists()
    stats = json.loads((prepared / 'stats.json').read_text(encoding='utf-8'))
    assert stats['train']['sessions'] == 3
    assert stats['dev']['sessions'] == 1
    assert stats['test']['sessions'] == 1
    assert (prepared / 'skip_report.txt').read_text(encoding='utf-8').strip()


def test_prepare_uses_data_dir_env(runner, raw_kvret_dir, tmp_path, monkeypatch):
    monkeypatch.setenv('SLU_DATA_DIR', str(tmp_path / 'from_env'))
    result = runner.invoke(cli, ['prepare', str(raw_kvret_dir)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'from_env' / 'train.jsonl').exists()


def test_kvret_star_with_zero_probability_keeps_statistics(runner, raw_kvret_dir, prepared, tmp_path):
    out = tmp_path / 'star'
    result = runner.invoke(cli, ['prepare', str(raw_kvret_dir), '--out-dir', str(out),
                                 '--kvret-star', '--prob', '0'])
    assert result.exit_code == 0, result.output
    assert (out / 'stats.json').read_bytes() == (prepared / 'stats.json').read_bytes()


def test_prepare_is_reproducible(runner, raw_kvret_dir, tmp_path):
    outputs = []
    for name in ('first', 'second'):
        out = tmp_path / name
        result = runner.invoke(cli, ['prepare', str(raw_kvret_dir), '--out-dir', str(out),
                                     '--kvret-star', '--prob', '1', '--seed', '7'])
        assert result.exit_code == 0, result.output
        outputs.append(out)
    for split in ('train', 'dev', 'test'):
        assert (outputs[0] / f'{split}.jsonl').read_bytes() == (outputs[1] / f'{split}.jsonl').read_bytes()


def test_prepare_rejects_bad_probability(runner, raw_kvret_dir, tmp_path):
    result = runner.invoke(cli, ['prepare', str(raw_kvret_dir), '--out-dir', str(tmp_path / 'x'),
                                 '--kvret-star', '--prob', '1.5'])
    assert result.exit_code != 0


def test_prepare_without_raw_files_fails(runner, tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    result = runner.invoke(cli, ['prepare', str(empty), '--out-dir', str(tmp_path / 'out')])
    assert result.exit_code != 0
    assert not (tmp_path / 'out' / 'train.jsonl').exists()


def test_stats_command(runner, prepared, tmp_path):
    output = tmp_path / 'stats_copy.json'
    result = runner.invoke(cli, ['stats', '--data-dir', str(prepared), '--output', str(output)])
    assert result.exit_code == 0, result.output
    assert json.loads(output.read_text(encoding='utf-8')) == json.loads(
        (prepared / 'stats.json').read_text(encoding='utf-8'))


def test_stats_without_prepared_data(runner, tmp_path):
    result = runner.invoke(cli, ['stats', '--data-dir', str(tmp_path / 'nothing')])
    assert result.exit_code != 0
    assert 'Missing prepared split' in result.output


def test_train_writes_run_files(trained):
    lines = (trained / 'metrics.jsonl').read_text(encoding='utf-8').splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])['epoch'] == 1
    assert (trained / 'checkpoint.npz').exists()
    run = json.loads((trained / 'run_config.json').read_text(encoding='utf-8'))
    assert run['variant'] == 'memnet'
    assert run['dli_lambda'] == 0.3


def test_flags_override_config_file(runner, prepared, run_config, tmp_path):
    out = tmp_path / 'run'
    result = runner.invoke(cli, ['train', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--output-dir', str(out), '--epochs', '1', '--no-dli'])
    assert result.exit_code == 0, result.output
    run = json.loads((out / 'run_config.json').read_text(encoding='utf-8'))
    assert run['max_epochs'] == 1
    assert run['dli_enabled'] is False


def test_train_rejects_nomem_with_dli(runner, prepared, run_config, tmp_path):
    result = runner.invoke(cli, ['train', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--output-dir', str(tmp_path / 'run'), '--variant', 'nomem', '--dli'])
    assert result.exit_code != 0
    assert 'dli' in result.output


def test_train_rejects_unknown_config_key(runner, prepared, tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({**TINY_RUN, 'learning_rate': 0.1}), encoding='utf-8')
    result = runner.invoke(cli, ['train', '--config', str(path), '--data-dir', str(prepared),
                                 '--output-dir', str(tmp_path / 'run')])
    assert result.exit_code != 0
    assert 'learning_rate' in result.output


def test_train_without_prepared_data(runner, run_config, tmp_path):
    result = runner.invoke(cli, ['train', '--config', str(run_config), '--data-dir', str(tmp_path / 'none'),
                                 '--output-dir', str(tmp_path / 'run')])
    assert result.exit_code != 0
    assert 'slu prepare' in result.output


def test_eval_reproduces_selection_scores(runner, prepared, trained):
    checkpoint = trained / 'checkpoint.npz'
    result = runner.invoke(cli, ['eval', str(checkpoint), '--data-dir', str(prepared)])
    assert result.exit_code == 0, result.output

    report = json.loads((trained / 'eval_dev.json').read_text(encoding='utf-8'))
    _, header = load_checkpoint(checkpoint)
    assert report['slot'] == pytest.approx(header['eval']['slot'], abs=1e-9)
    assert report['intent_acc'] == pytest.approx(header['eval']['intent_acc'], abs=1e-9)


def test_eval_reports_every_gold_slot_type(runner, prepared, trained, tmp_path):
    output = tmp_path / 'test_report.json'
    result = runner.invoke(cli, ['eval', str(trained / 'checkpoint.npz'), '--data-dir', str(prepared),
                                 '--split', 'test', '--output', str(output)])
    assert result.exit_code == 0, result.output
    gold_types = {
        chunk.type
        for session in read_jsonl(prepared / 'test.jsonl')
        for turn in session.turns if turn.is_driver
        for chunk in decode_chunks(turn.tags)
    }
    report = json.loads(output.read_text(encoding='utf-8'))
    assert set(report['per_slot_type']) == gold_types
    assert report['n_utterances'] == 1


def test_eval_missing_checkpoint(runner, prepared, tmp_path):
    result = runner.invoke(cli, ['eval', str(tmp_path / 'missing.npz'), '--data-dir', str(prepared)])
    assert result.exit_code != 0


def test_eval_vocab_mismatch(runner, raw_kvret_dir, trained, tmp_path):
    other = tmp_path / 'other'
    result = runner.invoke(cli, ['prepare', str(raw_kvret_dir), '--out-dir', str(other), '--min-freq', '2'])
    assert result.exit_code == 0, result.output
    result = runner.invoke(cli, ['eval', str(trained / 'checkpoint.npz'), '--data-dir', str(other)])
    assert result.exit_code != 0


def test_sweep_single_lambda(runner, prepared, run_config, tmp_path):
    output = tmp_path / 'sweep.csv'
    result = runner.invoke(cli, ['sweep', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--lambdas', '0.3', '--seeds', '1', '--epochs', '1', '--output', str(output)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(output)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 2
    assert list(frame['seed'].astype(str)) == ['1', 'mean']


def test_sweep_with_no_lambdas_writes_empty_table(runner, prepared, run_config, tmp_path):
    output = tmp_path / 'sweep.csv'
    result = runner.invoke(cli, ['sweep', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--lambdas', '', '--output', str(output)])
    assert result.exit_code == 0, result.output
    assert output.read_text(encoding='utf-8') == ','.join(SWEEP_COLUMNS) + '\n'


def test_sweep_rejects_lambda_out_of_range(runner, prepared, run_config, tmp_path):
    result = runner.invoke(cli, ['sweep', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--lambdas', '0.3,1.5', '--output', str(tmp_path / 'sweep.csv')])
    assert result.exit_code != 0
    assert not (tmp_path / 'sweep.csv').exists()


def test_compare_two_variants(runner, prepared, run_config, tmp_path):
    output = tmp_path / 'compare.csv'
    result = runner.invoke(cli, ['compare', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--variants', 'nomem,sden', '--seeds', '0', '--epochs', '1',
                                 '--output', str(output)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(output)
    assert list(frame.columns) == COMPARE_COLUMNS
    assert list(frame['variant']) == ['nomem', 'nomem', 'sden', 'sden', 'sden', 'sden']


def test_curves_export(runner, trained):
    result = runner.invoke(cli, ['curves', str(trained / 'metrics.jsonl')])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(trained / 'metrics.csv')
    assert list(frame['epoch']) == [1, 2]
    assert list(frame.columns) == ['epoch', 'train_loss', 'val_loss', 'slot_p', 'slot_r', 'slot_f1', 'intent_acc']


def test_version(runner):
    result = runner.invoke(cli, ['--version'])
    assert result.exit_code == 0
    assert '0.1.0' in result.output


def test_train_writes_text_as_utf8(runner, prepared, run_config, tmp_path, monkeypatch):
    encodings = {}
    write_text = Path.write_text

    def recording(self, data, encoding=None, **kwargs):
        encodings[self.name] = encoding
        return write_text(self, data, encoding=encoding, **kwargs)

    monkeypatch.setattr(Path, 'write_text', recording)
    out = tmp_path / 'run_é'
    result = runner.invoke(cli, ['train', '--config', str(run_config), '--data-dir', str(prepared),
                                 '--output-dir', str(out), '--epochs', '1'])
    assert result.exit_code == 0, result.output
    assert encodings['run_config.json'] == 'utf-8'
    assert set(encodings.values()) == {'utf-8'}
    run = json.loads((out / 'run_config.json').read_text(encoding='utf-8'))
    assert run['variant'] == 'memnet'


def test_eval_help_explains_stored_scores(runner):
    result = runner.invoke(cli, ['eval', '--help'])
    assert result.exit_code == 0
    text = ' '.join(result.output.split())
    assert 'header under `eval`' in text
    assert 'Evaluating the dev split reproduces those scores' in text
