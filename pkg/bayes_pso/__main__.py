from bayes_pso.main import main

raise SystemExit(main())
