from acaf.cli import main

raise SystemExit(main())
