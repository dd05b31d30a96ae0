"""Command-line interface.

Exit codes: 0 success, 1 usage error (bad flags/arguments), 2 data error
(malformed input files). Every command is deterministic given its flags; only
the timing columns of sweep-time vary between runs. CSV goes to stdout (and to
``--out`` when given); the sweep/hist commands can additionally render a
matplotlib figure with ``--plot``.
"""

from __future__ import annotations

import csv
import io
import sys

import click

from .codebook import CodebookQuantTable, TwoTierQuantTable
from .fileio import DataError, read_embq, read_embt, write_embq, write_embt
from .methods import ALL_METHODS, UNIFORM_METHODS, quantize_table, report_for
from .metrics import REPORT_COLUMNS, quantized_size_bytes, table_normalized_l2
from .packed import PackedTable4
from .rng import DISTRIBUTIONS, RngSpec, sample_table
from .sweeps import (
    HIST_DUMP_COLUMNS,
    SWEEP_DIM_COLUMNS,
    SWEEP_TIME_COLUMNS,
    hist_dump,
    hist_dump_csv,
    sweep_dim,
    sweep_dim_csv,
    sweep_time,
    sweep_time_csv,
)
from .uniform import UniformQuantTable

EVALUATE_COLUMNS = ("scheme", "rows", "dim", "nbits", "aux", "agg", "loss", "bytes", "percent")


def _emit_csv(columns, rows, out_path=None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    text = buf.getvalue()
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)


def _parse_ints(text: str, label: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise click.UsageError(f"{label} must be a comma-separated list of integers, got {text!r}")


def _parse_methods(text: str) -> list[str]:
    names = list(ALL_METHODS) if text == "all" else [p for p in text.split(",") if p]
    for name in names:
        if name not in ALL_METHODS:
            raise click.UsageError(f"unknown method {name!r}; choose from {', '.join(ALL_METHODS)}")
    return names


@click.group()
def cli() -> None:
    """Row-wise 4-bit (and 8-bit) embedding-table quantization toolkit.

    Exit codes: 0 success, 1 usage error, 2 data error. All commands are
    deterministic given their flags; only sweep-time's timing columns vary.
    """


@cli.command()
@click.option("--dist", type=click.Choice(DISTRIBUTIONS), default="gaussian", show_default=True)
@click.option("--mean", type=float, default=0.0, show_default=True,
              help="Mean (gaussian) or location (laplacian).")
@click.option("--std", type=float, default=1.0, show_default=True,
              help="Stddev (gaussian) or scale (laplacian).")
@click.option("--rows", type=click.IntRange(min=1), required=True)
@click.option("--dim", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(dist, mean, std, rows, dim, seed, out) -> None:
    """Sample a synthetic table and write it as an EMBT file."""
    table = sample_table(RngSpec(dist, mean, std, seed), rows, dim)
    write_embt(out, table)
    click.echo(f"wrote {out}: {rows}x{dim} {dist} table")


@cli.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--method", type=click.Choice(ALL_METHODS), required=True)
@click.option("--bits", type=click.Choice(["4", "8"]), default="4", show_default=True)
@click.option("--aux", type=click.Choice(["fp32", "fp16"]), default="fp32", show_default=True)
@click.option("--b", type=click.IntRange(min=1), default=200, show_default=True,
              help="Histogram bins / greedy steps.")
@click.option("--r", type=float, default=0.16, show_default=True,
              help="Greedy shrink fraction.")
@click.option("--k", type=int, default=None, help="Tier-1 cluster count (kmeans-cls only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def quantize(in_path, method, bits, aux, b, r, k, seed, out) -> None:
    """Quantize an EMBT table and write an EMBQ file; prints the report row.

    CSV columns: method,d,loss,bytes,percent.
    """
    nbits = int(bits)
    if method not in UNIFORM_METHODS and nbits != 4:
        raise click.UsageError(f"--method {method} supports only --bits 4")
    if k is not None and method != "kmeans-cls":
        raise click.UsageError("--k applies only to --method kmeans-cls")
    if method == "kmeans-cls" and k is None:
        raise click.UsageError("--method kmeans-cls requires --k")
    if not 0.0 < r <= 1.0:
        raise click.UsageError(f"--r must be in (0, 1], got {r}")
    table = read_embt(in_path)
    if k is not None and not 1 <= k <= table.rows:
        raise click.UsageError(f"--k must be in [1, {table.rows}] for this table")
    if k is not None and (k & (k - 1)) != 0:
        raise click.UsageError(f"--k must be a power of two, got {k}")
    quant = quantize_table(table, method, nbits, aux, b, r, k, seed)
    write_embq(out, quant)
    report = report_for(table, quant, method, nbits, aux, k)
    _emit_csv(REPORT_COLUMNS, [report.csv_row(table.dim)])


def _scheme_of(quant):
    """(sizing scheme, nbits, k) of a loaded quantized table."""
    if isinstance(quant, PackedTable4):
        return "uniform", 4, None
    if isinstance(quant, UniformQuantTable):
        return "uniform", quant.nbits, None
    if isinstance(quant, CodebookQuantTable):
        return "kmeans", 4, None
    if isinstance(quant, TwoTierQuantTable):
        return "kmeans-cls", 4, quant.k
    raise TypeError(f"unsupported quantized table {type(quant).__name__}")


@cli.command()
@click.option("--orig", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--quant", "quant_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--agg", type=click.Choice(["flattened", "row-mean"]), default=None,
              help="Aggregation mode; both are emitted when omitted.")
def evaluate(orig, quant_path, agg) -> None:
    """Loss and size accounting of a quantized table against its source.

    CSV columns: scheme,rows,dim,nbits,aux,agg,loss,bytes,percent; one row per
    aggregation mode (both when --agg is omitted).
    """
    table = read_embt(orig)
    quant = read_embq(quant_path)
    if (quant.rows, quant.dim) != (table.rows, table.dim):
        raise DataError(
            f"shape mismatch: original {table.rows}x{table.dim}, quantized {quant.rows}x{quant.dim}"
        )
    scheme, nbits, k = _scheme_of(quant)
    recon = quant.dequantize()
    nbytes, percent = quantized_size_bytes(scheme, table.rows, table.dim, nbits,
                                           quant.aux_precision, k)
    modes = [agg] if agg else ["flattened", "row-mean"]
    rows = []
    for mode in modes:
        loss = table_normalized_l2(table, recon, mode)
        rows.append([
            scheme, str(table.rows), str(table.dim), str(nbits), quant.aux_precision,
            mode, format(loss, ".6g"), format(nbytes, ".10g"), format(percent, ".2f"),
        ])
    _emit_csv(EVALUATE_COLUMNS, rows)


@cli.command("sweep-dim")
@click.option("--dims", required=True, help="Comma-separated dimensions, e.g. 8,16,32.")
@click.option("--rows", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--dist", type=click.Choice(DISTRIBUTIONS), default="gaussian", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--methods", default="all", show_default=True,
              help="Comma-separated method names or 'all'.")
@click.option("--bits", type=click.Choice(["4", "8"]), default="4", show_default=True)
@click.option("--aux", type=click.Choice(["fp32", "fp16"]), default="fp32", show_default=True)
@click.option("--b", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--r", type=float, default=0.16, show_default=True)
@click.option("--k", type=int, default=None)
@click.option("--repeats", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Also render the sweep to this image file.")
def sweep_dim_cmd(dims, rows, dist, seed, methods, bits, aux, b, r, k, repeats, out, plot) -> None:
    """Loss-vs-dimension sweep on fresh seeded tables; CSV per (method, d).

    CSV columns: method,d,mean_normalized_l2.
    """
    dim_list = _parse_ints(dims, "--dims")
    if any(d < 1 for d in dim_list):
        raise click.UsageError("--dims must be positive")
    method_list = _parse_methods(methods)
    if "kmeans-cls" in method_list and k is None:
        raise click.UsageError("--methods including kmeans-cls requires --k")
    if int(bits) != 4 and any(m in ("kmeans", "kmeans-cls") for m in method_list):
        raise click.UsageError("codebook methods support only --bits 4")
    records = sweep_dim(dim_list, method_list, rows, dist, seed, int(bits), aux, b, r, k, repeats)
    _emit_csv(SWEEP_DIM_COLUMNS, sweep_dim_csv(records), out)
    if plot:
        from .plotting import plot_sweep_dim

        plot_sweep_dim(records, plot)


@cli.command("sweep-time")
@click.option("--dims", required=True)
@click.option("--rows", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--dist", type=click.Choice(DISTRIBUTIONS), default="gaussian", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--methods", default="asym,greedy,gss,hist-apprx,hist-brute", show_default=True)
@click.option("--bits", type=click.Choice(["4", "8"]), default="4", show_default=True)
@click.option("--aux", type=click.Choice(["fp32", "fp16"]), default="fp32", show_default=True)
@click.option("--b", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--r", type=float, default=0.16, show_default=True)
@click.option("--repeats", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", type=click.Path(dir_okay=False), default=None)
def sweep_time_cmd(dims, rows, dist, seed, methods, bits, aux, b, r, repeats, out, plot) -> None:
    """Per-row quantization timing plus deterministic work counters.

    CSV columns: method,d,ms_per_row,log10_ms,loss_evals,bin_visits. The two
    ms columns are wall-clock; the counters are exact.
    """
    dim_list = _parse_ints(dims, "--dims")
    if any(d < 1 for d in dim_list):
        raise click.UsageError("--dims must be positive")
    method_list = _parse_methods(methods)
    if "kmeans-cls" in method_list:
        raise click.UsageError("sweep-time supports row-level methods, not kmeans-cls")
    records = sweep_time(dim_list, method_list, rows, dist, seed, int(bits), aux, b, r, repeats)
    _emit_csv(SWEEP_TIME_COLUMNS, sweep_time_csv(records), out)
    if plot:
        from .plotting import plot_sweep_time

        plot_sweep_time(records, plot)


@cli.command("hist-dump")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--row", "row_index", type=click.IntRange(min=0), required=True)
@click.option("--methods", default="sym,gss,asym,hist-apprx,hist-brute,aciq,greedy,kmeans",
              show_default=True)
@click.option("--bins", type=click.IntRange(min=1), default=40, show_default=True)
@click.option("--b", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--r", type=float, default=0.16, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", type=click.Path(dir_okay=False), default=None)
def hist_dump_cmd(in_path, row_index, methods, bins, b, r, out, plot) -> None:
    """Histogram of a row before/after quantization with each method.

    CSV columns: method,bin_center,count; the original row's histogram is
    emitted under the method name "original".
    """
    method_list = _parse_methods(methods)
    if "kmeans-cls" in method_list:
        raise click.UsageError("hist-dump supports row-level methods, not kmeans-cls")
    table = read_embt(in_path)
    if row_index >= table.rows:
        raise click.UsageError(f"--row {row_index} out of range for {table.rows} rows")
    records = hist_dump(table, row_index, method_list, bins, 4, b, r)
    _emit_csv(HIST_DUMP_COLUMNS, hist_dump_csv(records), out)
    if plot:
        from .plotting import plot_hist_dump

        plot_hist_dump(records, plot)


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="embquant", standalone_mode=False)
    except click.exceptions.Exit as exc:  # --help and friends
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except ValueError as exc:  # incompatible argument combinations from the library
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
