"""Command-line client for the ctxlens service.

Every data command builds a ``RunConfig`` from a JSON config file plus flag
overrides (flags mirror config keys one-to-one) and POSTs it to the
service. With ``--server`` the request goes over the network; without it,
the app is mounted in-process so the commands work offline with identical
behavior. Exit codes: 0 success, 1 runtime error, 2 usage/config error.
"""

import asyncio
import json
import sys

import click
import httpx

from .config import load_config
from .errors import UsageError
from .pipeline import ANALYSES


def _gather_overrides(**kwargs) -> dict:
    mapping = {
        "corpus": "corpus_paths",
        "vocab": "vocab_path",
        "tag_file": "tag_path",
        "provider": "provider",
        "context_lens": "context_lens",
        "stride_ratio": "stride_ratio",
        "ngram_n": "ngram_n",
        "ngram_n_range": "ngram_n_range",
        "freq_corpus": "freq_corpus_paths",
        "output_dir": "output_dir",
        "epsilon": "epsilon",
        "seed": "seed",
        "workers": "workers",
        "lm_n": "lm.n_lm",
        "lm_lambda": "lm.lam",
        "lm_alpha": "lm.alpha",
        "lm_n_cache": "lm.n_cache",
    }
    overrides = {}
    for flag, key in mapping.items():
        value = kwargs.get(flag)
        if value in (None, ()):
            continue
        if flag in ("corpus", "freq_corpus"):
            value = list(value)
        elif flag == "context_lens":
            value = [int(x) for x in value.split(",")]
        elif flag == "ngram_n_range":
            lo, _, hi = value.partition(":")
            value = [int(lo), int(hi)]
        overrides[key] = value
    return overrides


def _config_from(config_path, kwargs):
    return load_config(config_path, _gather_overrides(**kwargs))


async def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        transport = None
        base_url = server
    else:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        base_url = "http://ctxlens.local"
    async with httpx.AsyncClient(transport=transport, base_url=base_url,
                                 timeout=None) as client:
        resp = await client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except json.JSONDecodeError:
            detail = resp.text
        if isinstance(detail, dict) and "message" in detail:
            kind, message = detail.get("kind", "runtime"), detail["message"]
        else:
            kind, message = "usage" if resp.status_code in (400, 404, 422) else "runtime", str(detail)
        click.echo(f"error: {message}", err=True)
        sys.exit(2 if kind == "usage" else 1)
    return resp.json()


def _run(server, path, payload) -> dict:
    try:
        return asyncio.run(_post(server, path, payload))
    except UsageError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except httpx.HTTPError as e:
        click.echo(f"error: cannot reach server: {e}", err=True)
        sys.exit(1)


def _common_options(fn):
    options = [
        click.option("--config", "-c", "config_path", required=True,
                     type=click.Path(exists=True, dir_okay=False),
                     help="JSON run configuration."),
        click.option("--corpus", multiple=True, help="Corpus file (repeatable)."),
        click.option("--vocab", help="Vocabulary file."),
        click.option("--tag-file", help="POS tag file."),
        click.option("--provider", help="'builtin' or 'file:<path>'."),
        click.option("--context-lens", help="Comma-separated context lengths."),
        click.option("--stride-ratio", type=int, help="Stride rule: S = max(1, K // ratio)."),
        click.option("--ngram-n", type=int, help="N-gram order for recurrence analyses."),
        click.option("--ngram-n-range", help="N sweep range 'lo:hi'."),
        click.option("--freq-corpus", multiple=True, help="Frequency corpus file (repeatable)."),
        click.option("--output-dir", help="Artifact directory."),
        click.option("--epsilon", type=float, help="Unchanged-token tolerance."),
        click.option("--seed", type=int, help="Random seed."),
        click.option("--workers", type=int, help="Document-level worker pool size."),
        click.option("--lm-n", type=int, help="Backoff LM order."),
        click.option("--lm-lambda", type=float, help="Backoff/cache interpolation weight."),
        click.option("--lm-alpha", type=float, help="Cache smoothing."),
        click.option("--lm-n-cache", type=int, help="Cache n-gram order."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


@click.group()
@click.option("--server", envvar="CTXLENS_SERVER", default=None,
              help="Service URL; omit to run in-process.")
@click.pass_context
def main(ctx, server):
    """Token-level diagnostics for long-context language modeling."""
    ctx.obj = {"server": server}


@main.command()
@_common_options
@click.pass_context
def train(ctx, config_path, **kwargs):
    """Train the built-in LM and write the model artifact."""
    config = _config_from(config_path, kwargs)
    result = _run(ctx.obj["server"], "/train", {"config": config.model_dump(mode="json")})
    click.echo(json.dumps(result, sort_keys=True, indent=2))


@main.command()
@_common_options
@click.option("--force", is_flag=True, help="Overwrite existing sweep outputs.")
@click.pass_context
def sweep(ctx, config_path, force, **kwargs):
    """Run the sliding-window evaluation and persist per-(doc, K) records."""
    config = _config_from(config_path, kwargs)
    result = _run(ctx.obj["server"], "/sweep",
                  {"config": config.model_dump(mode="json"), "force": force})
    click.echo(json.dumps({k: v for k, v in result.items() if k != "files"},
                          sort_keys=True, indent=2))


@main.command()
@click.argument("analysis", type=click.Choice(ANALYSES))
@_common_options
@click.pass_context
def analyze(ctx, analysis, config_path, **kwargs):
    """Run one analysis (ratios, pos, subword, ngram, ngram-sweep, frequency, confidence)."""
    config = _config_from(config_path, kwargs)
    result = _run(ctx.obj["server"], f"/analyze/{analysis}",
                  {"config": config.model_dump(mode="json")})
    click.echo(json.dumps(result["summary"], sort_keys=True, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
def serve(host, port):
    """Run the ctxlens service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
