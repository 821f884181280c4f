# Pipeline package initialization
