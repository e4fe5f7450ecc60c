version = "dev"
