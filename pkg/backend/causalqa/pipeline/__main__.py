import sys

from backend.causalqa.pipeline.main import main

sys.exit(main())
