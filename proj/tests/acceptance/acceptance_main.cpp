// Apache License, Version 2.0, refer to LICENSE.txt
#include <iostream>
int main() { std::cout << "placeholder\n"; return 0; }
