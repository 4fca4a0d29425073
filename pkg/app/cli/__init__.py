"""Command line front end: file schemas and subcommand implementations."""
