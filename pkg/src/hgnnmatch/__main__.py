from hgnnmatch.cli import main

main()
