from .bench import cli

cli()
