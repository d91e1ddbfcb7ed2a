"""Figure-rendering CLI: capasense-figs render --spec <json>."""

import sys

import click

from .render import RenderError, load_spec, render


@click.group()
def main():
    """Render capasense experiment exports as figures."""


@main.command("render")
@click.option("--spec", "spec_path", type=click.Path(exists=True), required=True,
              help="PlotSpec JSON document.")
def render_cmd(spec_path):
    try:
        spec = load_spec(spec_path)
        out = render(spec)
    except RenderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(4)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
