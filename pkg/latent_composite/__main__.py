from latent_composite.cli import main

raise SystemExit(main())
