"""Command-line interface for memslu."""

import functools
import json
from pathlib import Path

import click
import pandas as pd
from rich.progress import Progress
from rich.table import Table

from slu import __version__
from slu.data import (
    SPLITS,
    DatasetError,
    Vocab,
    build_kvret_star,
    build_vocab,
    compute_stats,
    encode_corpus,
    load_kvret,
    read_jsonl,
    split_seed,
    write_jsonl,
)
from slu.engine import CheckpointError
from slu.evaluation import write_csv
from slu.models import SluVariant
from slu.settings import DATA_DIR_ENV, default_data_dir, load_settings, setup_logging, stderr_console
from slu.training import (
    COMPARE_COLUMNS,
    SWEEP_COLUMNS,
    Checkpoint,
    ConfigError,
    MetricsHistory,
    RunConfig,
    compare_variants,
    evaluate,
    fit,
    lambda_sweep,
)

console = stderr_console

VOCAB_FILE = 'vocab.json'
STATS_FILE = 'stats.json'
SKIP_REPORT_FILE = 'skip_report.txt'
CHECKPOINT_FILE = 'checkpoint.npz'
METRICS_FILE = 'metrics.jsonl'
RUN_CONFIG_FILE = 'run_config.json'


def _fail_cleanly(command):
    """Turn library validation errors into a non-zero exit with a message."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (DatasetError, ConfigError, CheckpointError) as e:
            raise click.ClickException(str(e)) from e
        except (ValueError, FileNotFoundError, FloatingPointError) as e:
            raise click.ClickException(f"{type(e).__name__}: {e}") from e
    return wrapper


def _split_path(data_dir: Path, split: str) -> Path:
    return data_dir / f"{split}.jsonl"


def _parse_list(text: str, kind):
    """Comma-separated values; an empty string is an empty list."""
    if text is None:
        return None
    try:
        return [kind(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise click.BadParameter(f"cannot parse {text!r}: {e}") from e


def _load_prepared(data_dir: Path, splits=SPLITS):
    """Read prepared JSONL splits and the vocabulary."""
    vocab_path = data_dir / VOCAB_FILE
    if not vocab_path.exists():
        raise click.ClickException(f"No prepared data in {data_dir} (run `slu prepare` first)")
    sessions = {}
    for split in splits:
        path = _split_path(data_dir, split)
        if not path.exists():
            raise click.ClickException(f"Missing prepared split: {path}")
        sessions[split] = read_jsonl(path)
    return sessions, Vocab.load(vocab_path)


def _resolve_data_dir(flag, run: RunConfig = None) -> Path:
    if flag:
        return Path(flag)
    if run is not None and run.data_dir:
        return Path(run.data_dir)
    return Path(default_data_dir())


def _resolve_output_dir(flag, run: RunConfig) -> Path:
    if flag:
        return Path(flag)
    if run.output_dir:
        return Path(run.output_dir)
    return Path(load_settings()['data']['output_dir'])


def _stats_table(stats, title: str) -> Table:
    table = Table(title=title)
    table.add_column("Split", style="cyan")
    table.add_column("Sessions", justify="right")
    table.add_column("Turns", justify="right")
    table.add_column("Driver turns", justify="right")
    table.add_column("Avg. turns", justify="right", style="green")
    for name, split in stats.splits.items():
        table.add_row(name, str(split.sessions), str(split.turns), str(split.driver_turns), f"{split.avg_turns:.2f}")
    if stats.total is not None and len(stats.splits) > 1:
        total = stats.total
        table.add_row("total", str(total.sessions), str(total.turns), str(total.driver_turns),
                      f"{total.avg_turns:.2f}", style="bold")
    return table


def _frame_table(frame, title: str) -> Table:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right" if column not in ('variant', 'dli') else "left")
    for _, row in frame.iterrows():
        cells = []
        for value in row.values:
            cells.append(f"{value:.4f}" if isinstance(value, float) else str(value))
        table.add_row(*cells)
    return table


common_run_options = [
    click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                 help='JSON run configuration'),
    click.option('--data-dir', envvar=DATA_DIR_ENV, type=click.Path(file_okay=False),
                 help=f'Prepared data directory (env: {DATA_DIR_ENV})'),
    click.option('--variant', type=click.Choice([v.value for v in SluVariant]), help='Model variant'),
    click.option('--dli/--no-dli', default=None, help='Enable the DLI auxiliary task'),
    click.option('--epochs', 'max_epochs', type=int, help='Maximum epochs'),
    click.option('--patience', 'early_stop_patience', type=int, help='Early-stop patience in epochs'),
    click.option('--batch-size', type=int, help='SLU examples per batch'),
    click.option('--dtype', type=click.Choice(['float64', 'float32']), help='Parameter dtype'),
]


def _with_options(options):
    def decorator(command):
        for option in reversed(options):
            command = option(command)
        return command
    return decorator


def _run_config(config_path, overrides) -> RunConfig:
    return RunConfig.load(config_path, {k: v for k, v in overrides.items() if v is not None})


@click.group()
@click.version_option(version=__version__)
@click.option('--log-level', default=None, help='Logging level (default from config/settings.yaml)')
def cli(log_level):
    """memslu - memory-based contextual SLU with dialogue logistic inference"""
    setup_logging(log_level)


@cli.command()
@click.argument('raw_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--out-dir', envvar=DATA_DIR_ENV, type=click.Path(file_okay=False),
              help=f'Output directory (env: {DATA_DIR_ENV})')
@click.option('--kvret-star', is_flag=True, help='Recombine sessions into multi-domain KVRET*')
@click.option('--prob', type=float, default=0.5, show_default=True, help='KVRET* recombination probability')
@click.option('--seed', type=int, default=0, show_default=True, help='KVRET* seed')
@click.option('--min-freq', type=int, default=1, show_default=True, help='Minimum token count for the vocabulary')
@_fail_cleanly
def prepare(raw_dir, out_dir, kvret_star, prob, seed, min_freq):
    """
    Parse the public KVRET release into canonical JSONL splits.

    RAW_DIR: Folder with kvret_{train,dev,test}_public.json

    Writes train/dev/test.jsonl, vocab.json, stats.json and skip_report.txt.
    """
    out_dir = Path(out_dir or default_data_dir())
    splits, report = load_kvret(raw_dir)

    if kvret_star:
        if not 0.0 <= prob <= 1.0:
            raise click.BadParameter(f"--prob must be in [0, 1], got {prob}")
        splits = {name: build_kvret_star(sessions, prob, split_seed(seed, name)) for name, sessions in splits.items()}

    out_dir.mkdir(parents=True, exist_ok=True)
    for name, sessions in splits.items():
        write_jsonl(sessions, _split_path(out_dir, name))
    vocab = build_vocab(splits['train'], min_freq=min_freq, label_sessions=splits['dev'] + splits['test'])
    vocab.save(out_dir / VOCAB_FILE)
    stats = compute_stats(splits)
    stats.write(out_dir / STATS_FILE)
    report.write(out_dir / SKIP_REPORT_FILE)

    console.print(_stats_table(stats, "KVRET*" if kvret_star else "KVRET"))
    console.print(f"[green]✓ Wrote prepared data to {out_dir}[/green] "
                  f"({report.dropped} dropped, {report.unmatched} unmatched slot values)")


@cli.command()
@click.option('--data-dir', envvar=DATA_DIR_ENV, type=click.Path(file_okay=False),
              help=f'Prepared data directory (env: {DATA_DIR_ENV})')
@click.option('--output', type=click.Path(dir_okay=False), help='Also write the statistics as JSON')
@_fail_cleanly
def stats(data_dir, output):
    """Show session counts and average turns of prepared splits."""
    data_dir = _resolve_data_dir(data_dir)
    splits = {}
    for split in SPLITS:
        path = _split_path(data_dir, split)
        if not path.exists():
            raise click.ClickException(f"Missing prepared split: {path}")
        splits[split] = read_jsonl(path)
    result = compute_stats(splits)
    console.print(_stats_table(result, f"Dataset statistics ({data_dir})"))
    if output:
        result.write(output)


@cli.command()
@_with_options(common_run_options)
@click.option('--lambda', 'dli_lambda', type=float, help='DLI weight in the joint loss')
@click.option('--seed', type=int, help='Run seed')
@click.option('--output-dir', type=click.Path(file_okay=False), help='Where to write checkpoint and metrics')
@_fail_cleanly
def train(config_path, data_dir, output_dir, **overrides):
    """
    Train a model on prepared data.

    Writes checkpoint.npz (best validation loss), metrics.jsonl (one line
    per epoch) and run_config.json to the output directory.
    """
    run = _run_config(config_path, overrides)
    config = run.train
    data_dir = _resolve_data_dir(data_dir, run)
    output_dir = _resolve_output_dir(output_dir, run)
    sessions, vocab = _load_prepared(data_dir, ('train', 'dev'))
    train_set = encode_corpus(sessions['train'], vocab)
    dev_set = encode_corpus(sessions['dev'], vocab)

    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / RUN_CONFIG_FILE).write_text(json.dumps(run.to_dict(), indent=2, sort_keys=True) + '\n',
                                              encoding='utf-8')

    console.print(f"\n[bold blue]Training {config.variant.value} "
                  f"(dli={config.dli_enabled}, lambda={config.effective_lambda})[/bold blue]\n")
    with Progress(console=console) as progress:
        epochs = progress.add_task("[cyan]Epochs", total=config.max_epochs)
        batches = progress.add_task("[cyan]Batches", total=None)

        def on_batch(done, total):
            progress.update(batches, completed=done, total=total)

        def on_epoch(metrics):
            progress.update(epochs, advance=1,
                            description=f"[cyan]Epoch {metrics.epoch} (val loss {metrics.val_loss:.4f})")

        result = fit(config, train_set, dev_set, vocab,
                     metrics_path=output_dir / METRICS_FILE,
                     checkpoint_path=output_dir / CHECKPOINT_FILE,
                     on_epoch=on_epoch, on_batch=on_batch)

    evaluation = result.checkpoint.header['eval']
    console.print(f"[green]✓ Best epoch {result.best_epoch} of {len(result.history)}[/green]: "
                  f"slot F1 {evaluation['slot']['f1']:.2f}, intent acc {evaluation['intent_acc']:.4f}")
    console.print(f"Checkpoint: {output_dir / CHECKPOINT_FILE}")


@cli.command(name='eval')
@click.argument('checkpoint', type=click.Path(dir_okay=False))
@click.option('--split', type=click.Choice(list(SPLITS)), default='dev', show_default=True)
@click.option('--data-dir', envvar=DATA_DIR_ENV, type=click.Path(file_okay=False),
              help=f'Prepared data directory (env: {DATA_DIR_ENV})')
@click.option('--output', type=click.Path(dir_okay=False), help='Report file (default: next to the checkpoint)')
@click.option('--workers', type=int, default=None, help='Evaluation threads')
@_fail_cleanly
def evaluate_command(checkpoint, split, data_dir, output, workers):
    """
    Evaluate a checkpoint on a prepared split.

    CHECKPOINT: checkpoint.npz written by `slu train`

    Training stores the selected parameters' dev scores in the checkpoint
    header under `eval`, measured after rounding to the 32-bit storage.
    Evaluating the dev split reproduces those scores, which can differ slightly
    from the selected epoch's line in metrics.jsonl.
    """
    loaded = Checkpoint.load(checkpoint)
    data_dir = _resolve_data_dir(data_dir)
    sessions, vocab = _load_prepared(data_dir, (split,))
    loaded.check_vocab(vocab)
    model = loaded.build_model()
    workers = workers or load_settings()['evaluation']['workers']

    report, val_loss = evaluate(model, encode_corpus(sessions[split], vocab), vocab, workers)
    output = Path(output) if output else Path(checkpoint).with_name(f"eval_{split}.json")
    report.write_json(output)

    table = Table(title=f"{loaded.variant} on {split} ({report.n_utterances} utterances)")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right", style="green")
    data = report.to_dict()
    for key in ('p', 'r', 'f1', 'macro_f1'):
        table.add_row(f"slot {key}", f"{data['slot'][key]:.2f}")
    table.add_row("intent acc", f"{report.intent_acc:.4f}")
    table.add_row("loss", f"{val_loss:.4f}")
    console.print(table)
    console.print(_frame_table(report.per_type_frame(), "Per slot type"))
    console.print(f"Report: {output}")


@cli.command()
@_with_options(common_run_options)
@click.option('--lambdas', help='Comma-separated λ values (default from config)')
@click.option('--seeds', help='Comma-separated seeds (default from config)')
@click.option('--jobs', type=int, help='Parallel training processes')
@click.option('--output', type=click.Path(dir_okay=False), help='CSV file (default: <output_dir>/sweep.csv)')
@_fail_cleanly
def sweep(config_path, data_dir, lambdas, seeds, jobs, output, **overrides):
    """
    Train one model per (λ, seed) and tabulate dev slot F1 and intent accuracy.

    CSV columns: lambda, seed, slot_f1, intent_acc; each λ is followed by a
    row with seed "mean".
    """
    overrides.update(lambdas=_parse_list(lambdas, float), seeds=_parse_list(seeds, int), jobs=jobs)
    run = _run_config(config_path, overrides)
    output = Path(output) if output else _resolve_output_dir(None, run) / 'sweep.csv'

    if run.lambdas and run.seeds:
        sessions, vocab = _load_prepared(_resolve_data_dir(data_dir, run), ('train', 'dev'))
        frame = lambda_sweep(run.train, run.lambdas, run.seeds,
                             encode_corpus(sessions['train'], vocab), encode_corpus(sessions['dev'], vocab),
                             vocab, workers=run.jobs)
    else:
        frame = pd.DataFrame(columns=SWEEP_COLUMNS)
    write_csv(frame, output, SWEEP_COLUMNS)
    console.print(_frame_table(frame, "Lambda sweep"))
    console.print(f"Table: {output}")


@cli.command()
@_with_options(common_run_options)
@click.option('--seeds', help='Comma-separated seeds (default from config)')
@click.option('--variants', help='Comma-separated variants (default: all)')
@click.option('--jobs', type=int, help='Parallel training processes')
@click.option('--split', type=click.Choice(['dev', 'test']), default='test', show_default=True,
              help='Split the selected checkpoints are scored on')
@click.option('--output', type=click.Path(dir_okay=False), help='CSV file (default: <output_dir>/compare.csv)')
@_fail_cleanly
def compare(config_path, data_dir, seeds, variants, jobs, split, output, **overrides):
    """Train every variant with and without DLI and tabulate slot and intent scores."""
    overrides.update(seeds=_parse_list(seeds, int), jobs=jobs)
    overrides.pop('variant', None)
    # DLI is toggled per grid cell.
    overrides.pop('dli', None)
    run = _run_config(config_path, overrides)
    variant_list = _parse_list(variants, str)
    output = Path(output) if output else _resolve_output_dir(None, run) / 'compare.csv'

    sessions, vocab = _load_prepared(_resolve_data_dir(data_dir, run), ('train', 'dev', split))
    frame = compare_variants(
        run.train, run.seeds,
        encode_corpus(sessions['train'], vocab), encode_corpus(sessions['dev'], vocab), vocab,
        test=encode_corpus(sessions[split], vocab) if split == 'test' else None,
        variants=variant_list or None, workers=run.jobs,
    )
    write_csv(frame, output, COMPARE_COLUMNS)
    console.print(_frame_table(frame, f"Variant comparison ({split})"))
    console.print(f"Table: {output}")


@cli.command()
@click.argument('metrics_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--output', type=click.Path(dir_okay=False), help='CSV file (default: metrics file with .csv suffix)')
@_fail_cleanly
def curves(metrics_file, output):
    """
    Export per-epoch metrics (metrics.jsonl) as CSV for plotting.

    METRICS_FILE: metrics.jsonl written by `slu train`
    """
    frame = MetricsHistory.read(metrics_file)
    output = Path(output) if output else Path(metrics_file).with_suffix('.csv')
    write_csv(frame, output, ['epoch', 'train_loss', 'val_loss', 'slot_p', 'slot_r', 'slot_f1', 'intent_acc'])
    console.print(f"[green]✓ {len(frame)} epochs written to {output}[/green]")


if __name__ == '__main__':
    cli()
