from ep3_tracker.cli import main

main()
