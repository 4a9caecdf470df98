class ForgeError(Exception):
    """
    Raise this exception for issues which the user can address. The CLI prints
    the code and message on a single line and exits with status 1.
    """

    code = "ForgeError"


class ConfigError(ForgeError):
    code = "ConfigError"


class MissingPrerequisite(ForgeError):
    code = "MissingPrerequisite"


class MalformedInput(ForgeError):
    code = "MalformedInput"
