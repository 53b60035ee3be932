from betalab.cli import main

main()
