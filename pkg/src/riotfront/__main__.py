from riotfront.cli import entry

entry()
